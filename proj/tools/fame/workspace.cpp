#include "workspace.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "fame/errors.hpp"
#include "fame/hashing.hpp"

namespace fame::cli {

Workspace::Workspace(std::filesystem::path root) : root_(std::move(root)), start_(std::chrono::steady_clock::now()) {}

std::filesystem::path Workspace::require(const Artifact& a) {
  auto p = path(a);
  if (!std::filesystem::exists(p)) {
    std::string hint = std::string("run `fame ") + a.producer + "` first";
    if (std::string(a.producer) == "ingest") hint = "run `fame ingest` (or `fame simulate`) first";
    throw DataError("missing " + std::string(a.file) + " in " + root_.string() + "; " + hint);
  }
  inputs_.push_back(p);
  return p;
}

void Workspace::input(const std::filesystem::path& p) {
  if (!std::filesystem::exists(p)) throw DataError("input file not found: " + p.string());
  inputs_.push_back(p);
}

std::filesystem::path Workspace::output(const Artifact& a) {
  std::filesystem::create_directories(root_);
  auto p = path(a);
  outputs_.push_back(p);
  return p;
}

void Workspace::write_manifest(const std::string& command, std::uint64_t seed,
                               const std::map<std::string, std::string>& config) const {
  using nlohmann::json;
  auto files = [](const std::vector<std::filesystem::path>& paths) {
    json arr = json::array();
    for (const auto& p : paths) arr.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    return arr;
  };
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  json m{{"command", command},
         {"seed", seed},
         {"duration_seconds", secs},
         {"inputs", files(inputs_)},
         {"outputs", files(outputs_)},
         {"config", config}};
  const auto dir = root_ / "manifests";
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / (command + ".json"));
  if (!out) throw DataError("cannot write manifest in " + dir.string());
  out << m.dump(2) << '\n';
}

}  // namespace fame::cli
