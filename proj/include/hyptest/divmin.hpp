#ifndef HYPTEST_DIVMIN_HPP
#define HYPTEST_DIVMIN_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hyptest/pmf.hpp"

namespace hyptest {

// Fixes the sub-marginal of the optimization variable over `axes` to
// `target`. The target's axes may come in any order; they are aligned to
// the ambient pmf by name.
struct MarginalConstraint {
  std::vector<std::string> axes;
  JointPmf target;
};

struct ProjectionResult {
  double value = 0.0;     // D(argmin || target), nats
  JointPmf argmin;
  int iterations = 0;     // full constraint cycles
  double residual = 0.0;  // max L-inf sub-marginal deviation at exit
};

struct ProjectOptions {
  double tol = 1e-10;
  int max_iters = 100000;
  // Optional per-cycle observer (used by tests to check the descent
  // property along the iteration trace).
  std::function<void(const JointPmf&)> trace;
};

// Minimizes D(Q || target) over distributions Q matching every listed
// sub-marginal, by cyclic iterative proportional scaling. The fitted
// distribution inherits target's zeros and satisfies the product-form
// optimality certificate checked by certify().
ProjectionResult i_project(const JointPmf& target,
                           const std::vector<MarginalConstraint>& constraints,
                           const ProjectOptions& opts = {});

struct OracleOptions {
  int restarts = 4;
  int steps = 4000;          // per penalty stage
  std::uint64_t seed = 0x5eedULL;
};

// Independent second route to the same convex program: exponentiated
// gradient descent on the joint simplex with an increasing quadratic
// penalty on constraint violation, best value over random restarts.
// Shares no code with the scaling iteration above.
double oracle_min_divergence(const JointPmf& target,
                             const std::vector<MarginalConstraint>& constraints,
                             const OracleOptions& opts = {});

struct CertificateReport {
  bool ok = false;
  bool constraints_ok = false;
  bool factorization_ok = false;
  bool value_ok = false;
  double max_constraint_residual = 0.0;
  double factor_residual = 0.0;
  double value_gap = 0.0;
  std::string detail;
};

// Checks the KKT certificate of a projection result: constraint
// residuals, log(argmin/target) lying in the span of the constraint
// cylinder indicators, and value consistency.
CertificateReport certify(const ProjectionResult& result, const JointPmf& target,
                          const std::vector<MarginalConstraint>& constraints,
                          double tol = 1e-10);

}  // namespace hyptest

#endif
