#ifndef HYPTEST_ERRORS_HPP
#define HYPTEST_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hyptest {

// Error taxonomy mirrored by the CLI exit codes:
//   validation_error   -> 2   malformed or inconsistent inputs
//   precondition_error -> 3   model does not satisfy the mode's condition
//   convergence_error  -> 4   a solver failed to reach its tolerance
//   resource_error     -> 5   request exceeds the enumeration/memory budget
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class validation_error : public error {
 public:
  using error::error;
};

class precondition_error : public error {
 public:
  using error::error;
};

class convergence_error : public error {
 public:
  convergence_error(const std::string& msg, double residual)
      : error(msg), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class resource_error : public error {
 public:
  using error::error;
};

// Raised when D(p||q) is infinite; remembers the first offending cell.
class divergence_infinite_error : public precondition_error {
 public:
  divergence_infinite_error(const std::string& msg, std::size_t cell)
      : precondition_error(msg), cell_(cell) {}
  std::size_t cell() const { return cell_; }

 private:
  std::size_t cell_;
};

}  // namespace hyptest

#endif
