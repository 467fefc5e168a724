#pragma once

#include <string>

#include "fame/errors.hpp"

namespace fame::detail {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/'
};

inline Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ArgumentError("endpoint URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace fame::detail
