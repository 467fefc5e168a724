#include <nlohmann/json.hpp>

#include "fame/embedding_space.hpp"
#include "fame/errors.hpp"
#include "http_endpoint.hpp"

#include <httplib.h>

namespace fame::embedding {

Matrix fetch_embeddings(const std::string& endpoint, std::span<const std::string> texts,
                        const std::string& bearer_token, int timeout_seconds) {
  const auto ep = detail::split_url(endpoint);
  httplib::Client client(ep.origin);
  client.set_connection_timeout(timeout_seconds);
  client.set_read_timeout(timeout_seconds);
  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

  nlohmann::json body{{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  auto res = client.Post(ep.path, headers, body.dump(), "application/json");
  if (!res) throw ServiceError("embedding endpoint unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw ServiceError("embedding endpoint returned HTTP " + std::to_string(res->status), res->status >= 500);

  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError(std::string("embedding endpoint returned non-JSON body: ") + e.what(), false);
  }
  if (!reply.is_object() || !reply.contains("embeddings") || !reply["embeddings"].is_array())
    throw ServiceError("embedding reply lacks an 'embeddings' array", false);
  const auto& rows = reply["embeddings"];
  if (rows.size() != texts.size())
    throw ServiceError("embedding reply has " + std::to_string(rows.size()) + " rows for " +
                           std::to_string(texts.size()) + " texts",
                       false);
  if (rows.empty()) return Matrix(0, 0);
  const auto d = static_cast<Eigen::Index>(rows[0].size());
  Matrix out(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || static_cast<Eigen::Index>(rows[i].size()) != d)
      throw ServiceError("embedding reply rows have inconsistent dimension", false);
    for (Eigen::Index c = 0; c < d; ++c) {
      const auto& v = rows[i][static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ServiceError("embedding reply holds a non-numeric value", false);
      out(static_cast<Eigen::Index>(i), c) = v.get<double>();
    }
  }
  if (!out.allFinite()) throw ServiceError("embedding reply holds non-finite values", false);
  return out;
}

}  // namespace fame::embedding
