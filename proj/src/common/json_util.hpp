#pragma once

#include <set>
#include <string>

#include <json.hpp>

#include "common/error.hpp"

namespace mmae {

// Reads optional keys from one JSON object section and rejects keys that
// were never asked for, so typos in config files surface as config errors.
class JsonSection {
 public:
  JsonSection(const nlohmann::json& j, std::string name) : j_(j), name_(std::move(name)) {
    require(j_.is_object(), ErrorCode::Config, "section '" + name_ + "' must be a JSON object");
  }

  template <typename V>
  void get(const char* key, V& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<V>();
    } catch (const nlohmann::json::exception& e) {
      throw_error(ErrorCode::Config, name_ + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const nlohmann::json& at(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      require(seen_.count(item.key()) != 0, ErrorCode::Config, "unknown key '" + name_ + "." + item.key() + "'");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace mmae
