#pragma once

#include <string_view>

namespace steer::embedded {

// Contents of data/registry.json and data/lexicon.json, compiled in.
extern const std::string_view registry_json;
extern const std::string_view lexicon_json;

} // namespace steer::embedded
