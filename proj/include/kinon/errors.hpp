#ifndef KINON_ERRORS_HPP
#define KINON_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace kinon {

/// A rejected input value, tagged with the dotted path of the offending field
/// (e.g. "params.lambda" or "topology.width").
class ValidationError : public std::invalid_argument {
public:
  ValidationError(std::string path, const std::string& message)
      : std::invalid_argument(path.empty() ? message : path + ": " + message),
        path_(std::move(path)),
        reason_(message) {}

  const std::string& path() const noexcept { return path_; }
  const std::string& reason() const noexcept { return reason_; }

  /// Same error with `prefix.` prepended to the field path.
  ValidationError nested(const std::string& prefix) const {
    return ValidationError(path_.empty() ? prefix : prefix + "." + path_, reason_);
  }

private:
  std::string path_;
  std::string reason_;
};

/// Global conservation audit exceeded its tolerance.
class AuditFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace kinon

#endif  // KINON_ERRORS_HPP
