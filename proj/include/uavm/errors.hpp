#pragma once

#include <stdexcept>
#include <string>

namespace uavm {

// Pitch approached +-pi/2 where the Euler-rate map loses rank.
class GimbalLockError : public std::runtime_error {
public:
  explicit GimbalLockError(const std::string &what) : std::runtime_error(what) {}
};

// Arm Jacobian condition number exceeded the singularity guard.
class SingularArmError : public std::runtime_error {
public:
  explicit SingularArmError(const std::string &what) : std::runtime_error(what) {}
};

// Scenario/config file rejected; message carries the offending field path.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string &what) : std::runtime_error(what) {}
};

// Rollout aborted (non-finite state, guard tripped mid-integration).
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string &what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string &what) : std::runtime_error(what) {}
};

} // namespace uavm
