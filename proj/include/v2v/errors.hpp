#pragma once

#include <stdexcept>
#include <string>

namespace v2v {

/// Invalid or inconsistent configuration value. `key()` names the offending setting
/// when known, e.g. "radio.bandwidth_ghz".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// The requested deployment cannot be placed on the street.
class DeploymentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A material id that is not present in the registry.
class RegistryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace v2v
