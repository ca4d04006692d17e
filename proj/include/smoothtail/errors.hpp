#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smoothtail {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Fewer than two distinct finite observations.
class DegenerateSample : public Error {
 public:
  using Error::Error;
};

// An estimator hit a zero or negative spacing (ties) at a given k.
class UndefinedEstimate : public Error {
 public:
  UndefinedEstimate(std::size_t k, const std::string& what)
      : Error(what + " (k=" + std::to_string(k) + ")"), k_(k) {}
  std::size_t k() const noexcept { return k_; }

 private:
  std::size_t k_;
};

}  // namespace smoothtail
