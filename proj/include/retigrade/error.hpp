#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace retigrade {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input data (empty images, bad label files).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Bad manifests, inconsistent ensembles, unusable settings. The CLI maps
/// these to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A classifier failed to produce a usable score vector.
class BackendError : public Error {
 public:
  BackendError(std::string model_id, const std::string& what,
               std::optional<std::size_t> crop_index = std::nullopt)
      : Error(format(model_id, what, crop_index)),
        model_id_(std::move(model_id)),
        crop_index_(crop_index) {}

  const std::string& model_id() const noexcept { return model_id_; }
  std::optional<std::size_t> crop_index() const noexcept { return crop_index_; }

 private:
  static std::string format(const std::string& id, const std::string& what,
                            std::optional<std::size_t> crop) {
    std::string msg = "model '" + id + "'";
    if (crop) msg += " (crop " + std::to_string(*crop) + ")";
    return msg + ": " + what;
  }

  std::string model_id_;
  std::optional<std::size_t> crop_index_;
};

}  // namespace retigrade
