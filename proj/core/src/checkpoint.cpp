#include "fame/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fame/errors.hpp"

namespace fame::manifold {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'F', 'A', 'M', 'E', 'C', 'K', 'P', 'T'};

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw DataError("checkpoint truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

struct TensorRef {
  std::string name;
  const Matrix* data;
};

json time_to_json(const TimeEncoderConfig& t) {
  return {{"d_time", t.d_time}, {"t_min", t.t_min}, {"t_max", t.t_max}, {"frequency_base", t.frequency_base}};
}

TimeEncoderConfig time_from_json(const json& j) {
  TimeEncoderConfig t;
  t.d_time = j.at("d_time");
  t.t_min = j.at("t_min");
  t.t_max = j.at("t_max");
  t.frequency_base = j.at("frequency_base");
  return t;
}

}  // namespace

std::string serialize_checkpoint(const ModelCheckpoint& ckpt) {
  const auto& mc = ckpt.model.config();
  const auto& tc = ckpt.train_config;
  json header;
  header["schema_version"] = ckpt.schema_version;
  header["model"] = {{"input_dim", mc.input_dim},       {"latent_dim", mc.latent_dim},
                     {"topic_dim", mc.topic_dim},       {"hidden_width", mc.hidden_width},
                     {"hidden_layers", mc.hidden_layers}, {"num_topics", mc.num_topics},
                     {"activation", mc.activation},     {"time", time_to_json(mc.time)}};
  header["train"] = {{"alpha", tc.weights.alpha},
                     {"beta", tc.weights.beta},
                     {"gamma", tc.weights.gamma},
                     {"learning_rate", tc.learning_rate},
                     {"finite_diff_step", tc.finite_diff_step},
                     {"delta_align", tc.delta_align},
                     {"tau_time_days", tc.vanguard.tau_time_days},
                     {"delta_base", tc.vanguard.delta_base},
                     {"epochs", tc.epochs},
                     {"batch_size", tc.batch_size},
                     {"seed", tc.seed},
                     {"reduction", tc.reduction == Reduction::kMean ? "mean" : "sum"},
                     {"adam", {{"beta1", tc.adam.beta1}, {"beta2", tc.adam.beta2}, {"epsilon", tc.adam.epsilon}}}};
  header["topics"] = {{"k", ckpt.topics.k},
                      {"seed", ckpt.topics.seed},
                      {"iterations", ckpt.topics.iterations},
                      {"assignments", ckpt.topics.assignments}};
  header["rng_state"] = ckpt.rng_state;
  header["optimizer_step"] = ckpt.model.params().step();
  header["weight_range"] = {ckpt.weight_min, ckpt.weight_max};
  json trace = json::array();
  for (const auto& e : ckpt.trace) trace.push_back({e.epoch, e.total, e.spine, e.inspire, e.vanguard});
  header["trace"] = trace;

  std::vector<TensorRef> tensors;
  tensors.push_back({"topics.centroids", &ckpt.topics.centroids});
  for (const auto& [name, p] : ckpt.model.params().entries()) {
    tensors.push_back({"param/" + name, &p.value});
    tensors.push_back({"adam_m/" + name, &p.first_moment});
    tensors.push_back({"adam_v/" + name, &p.second_moment});
  }
  json dir = json::array();
  for (const auto& t : tensors) dir.push_back({{"name", t.name}, {"shape", {t.data->rows(), t.data->cols()}}});
  header["tensors"] = dir;

  // Header scalars round-trip: nlohmann writes shortest exact doubles.
  const std::string text = header.dump();
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.schema_version));
  put<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& t : tensors) {
    out.append(reinterpret_cast<const char*>(t.data->data()),
               static_cast<std::size_t>(t.data->size()) * sizeof(double));
  }
  return out;
}

ModelCheckpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw DataError("not a FAME checkpoint (bad magic)");
  std::size_t pos = sizeof kMagic;
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version > static_cast<std::uint32_t>(kCheckpointSchemaVersion))
    throw DataError("checkpoint schema version " + std::to_string(version) + " is newer than supported");
  const auto header_len = get<std::uint64_t>(bytes, pos);
  if (pos + header_len > bytes.size()) throw DataError("checkpoint truncated");
  json header;
  try {
    header = json::parse(bytes.substr(pos, header_len));
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint header is corrupt: ") + e.what());
  }
  pos += header_len;

  ModelCheckpoint ckpt;
  try {
    ckpt.schema_version = header.at("schema_version");
    const auto& m = header.at("model");
    ModelConfig mc;
    mc.input_dim = m.at("input_dim");
    mc.latent_dim = m.at("latent_dim");
    mc.topic_dim = m.at("topic_dim");
    mc.hidden_width = m.at("hidden_width");
    mc.hidden_layers = m.at("hidden_layers");
    mc.num_topics = m.at("num_topics");
    mc.activation = m.at("activation");
    mc.time = time_from_json(m.at("time"));

    const auto& t = header.at("train");
    auto& tc = ckpt.train_config;
    tc.weights = {t.at("alpha"), t.at("beta"), t.at("gamma")};
    tc.learning_rate = t.at("learning_rate");
    tc.finite_diff_step = t.at("finite_diff_step");
    tc.delta_align = t.at("delta_align");
    tc.vanguard = {t.at("tau_time_days"), t.at("delta_base")};
    tc.epochs = t.at("epochs");
    tc.batch_size = t.at("batch_size");
    tc.seed = t.at("seed");
    tc.reduction = t.at("reduction") == "sum" ? Reduction::kSum : Reduction::kMean;
    tc.adam = {t.at("adam").at("beta1"), t.at("adam").at("beta2"), t.at("adam").at("epsilon")};

    const auto& tp = header.at("topics");
    ckpt.topics.k = tp.at("k");
    ckpt.topics.seed = tp.at("seed");
    ckpt.topics.iterations = tp.at("iterations");
    ckpt.topics.assignments = tp.at("assignments").get<std::vector<int>>();
    ckpt.rng_state = header.at("rng_state");
    ckpt.weight_min = header.at("weight_range")[0];
    ckpt.weight_max = header.at("weight_range")[1];
    for (const auto& e : header.at("trace"))
      ckpt.trace.push_back({e[0].get<int>(), e[1].get<double>(), e[2].get<double>(), e[3].get<double>(),
                            e[4].get<double>()});

    ad::ParamStore store;
    store.set_step(header.at("optimizer_step"));
    for (const auto& entry : header.at("tensors")) {
      const std::string name = entry.at("name");
      const Eigen::Index rows = entry.at("shape")[0], cols = entry.at("shape")[1];
      const std::size_t n = static_cast<std::size_t>(rows * cols) * sizeof(double);
      if (pos + n > bytes.size()) throw DataError("checkpoint truncated in tensor " + name);
      Matrix value(rows, cols);
      std::memcpy(value.data(), bytes.data() + pos, n);
      pos += n;
      if (name == "topics.centroids") {
        ckpt.topics.centroids = std::move(value);
      } else if (name.starts_with("param/")) {
        store.add(name.substr(6), std::move(value));
      } else if (name.starts_with("adam_m/")) {
        store.at(name.substr(7)).first_moment = std::move(value);
      } else if (name.starts_with("adam_v/")) {
        store.at(name.substr(7)).second_moment = std::move(value);
      } else {
        throw DataError("unknown checkpoint tensor " + name);
      }
    }
    ckpt.model = ManifoldModel(mc, std::move(store));
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint header is missing fields: ") + e.what());
  }
  if (pos != bytes.size()) throw DataError("checkpoint has trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const auto bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

void write_loss_trace(std::ostream& out, const std::vector<EpochLoss>& trace) {
  out << "epoch,total,spine,inspire,vanguard\n" << std::setprecision(17);
  for (const auto& e : trace)
    out << e.epoch << ',' << e.total << ',' << e.spine << ',' << e.inspire << ',' << e.vanguard << '\n';
}

}  // namespace fame::manifold
