#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dtmsas {

/// Malformed scenario data, inconsistent dimensions or out-of-range parameters.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The eliminated block of a network is (numerically) singular.
class SingularNetworkError : public std::runtime_error {
 public:
  SingularNetworkError(const std::string& what, double rcond)
      : std::runtime_error(what), rcond_(rcond) {}
  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

/// A series coefficient or integrator state became non-finite or exceeded the
/// blow-up bound. `last_good_time` is the last instant with a trusted state.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double last_good_time, std::size_t index)
      : std::runtime_error(what), last_good_time_(last_good_time), index_(index) {}
  double last_good_time() const noexcept { return last_good_time_; }
  /// Window index (SAS) or step index (RK4) where divergence was detected.
  std::size_t index() const noexcept { return index_; }

 private:
  double last_good_time_;
  std::size_t index_;
};

}  // namespace dtmsas
