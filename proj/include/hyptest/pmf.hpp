#ifndef HYPTEST_PMF_HPP
#define HYPTEST_PMF_HPP

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hyptest/errors.hpp"

namespace hyptest {

// Probabilities below this are treated as exact zeros when deciding
// absolute continuity and support questions.
inline constexpr double kSupportEps = 1e-15;

// Tolerance on "sums to one" for ingested distributions.
inline constexpr double kMassTol = 1e-12;

// Joint probability mass function over a finite product alphabet with
// named coordinates. Cells are stored row-major, last axis fastest.
// Instances are immutable after construction; every operation on them is
// a pure function, so concurrent use from worker threads is safe.
class JointPmf {
 public:
  JointPmf(std::vector<std::string> axis_names, std::vector<int> axis_sizes,
           std::vector<double> probs);

  static JointPmf uniform(std::vector<std::string> axis_names,
                          std::vector<int> axis_sizes);

  const std::vector<std::string>& axis_names() const { return names_; }
  const std::vector<int>& axis_sizes() const { return sizes_; }
  const std::vector<double>& probs() const { return probs_; }
  const std::vector<std::size_t>& strides() const { return strides_; }

  std::size_t cell_count() const { return probs_.size(); }
  int rank() const { return static_cast<int>(names_.size()); }

  bool has_axis(std::string_view name) const;
  // Index of a named axis; throws validation_error for unknown labels.
  int axis_index(std::string_view name) const;
  int axis_size(std::string_view name) const;

  double operator[](std::size_t flat) const { return probs_[flat]; }
  double at(std::span<const int> idx) const;

  void decode(std::size_t flat, std::span<int> idx) const;
  std::size_t encode(std::span<const int> idx) const;

  bool full_support() const;

 private:
  std::vector<std::string> names_;
  std::vector<int> sizes_;
  std::vector<std::size_t> strides_;
  std::vector<double> probs_;
};

// Conditional law of one new coordinate given a tuple of existing ones:
// one probability row per input symbol combination (row-major over
// input_axes, in the order given).
struct CondChannel {
  std::vector<std::string> input_axes;
  std::vector<int> input_sizes;
  std::string output_axis;
  int output_size = 0;
  std::vector<double> rows;  // input_combos x output_size

  CondChannel(std::vector<std::string> input_axes_, std::vector<int> input_sizes_,
              std::string output_axis_, int output_size_, std::vector<double> rows_);

  std::size_t row_count() const;
  std::span<const double> row(std::size_t r) const;

  // U = f(X) style deterministic channel over a single input axis.
  static CondChannel deterministic(const std::string& input_axis, int input_size,
                                   const std::string& output_axis, int output_size,
                                   const std::vector<int>& map);
  static CondChannel constant(const std::string& input_axis, int input_size,
                              const std::string& output_axis,
                              const std::vector<double>& dist);
};

// The two laws under test: p under the null hypothesis, p_bar under the
// alternative. Both live on the same (X, Y1, Y2) alphabet.
struct HypothesisPair {
  JointPmf p;
  JointPmf p_bar;

  HypothesisPair(JointPmf p_, JointPmf p_bar_);

  // Zero-rate results assume p_bar > 0 everywhere and p_{XY1} > 0.
  bool zero_rate_support() const;
  void require_zero_rate_support() const;

  bool equal_x_marginals(double tol = 1e-9) const;
};

// Sums out every axis not listed; the retained axes keep the pmf's own
// axis order regardless of the order given here.
JointPmf marginal(const JointPmf& pmf, const std::vector<std::string>& axes);

// Reorders axes to the given permutation of the existing names.
JointPmf reorder_axes(const JointPmf& pmf, const std::vector<std::string>& order);

// D(p||q) in nats; requires identical alphabets and p << q. An absolute
// continuity violation raises divergence_infinite_error naming the cell.
double kl_divergence(const JointPmf& p, const JointPmf& q);

// H(axes | cond) in nats.
double entropy(const JointPmf& pmf, const std::vector<std::string>& axes,
               const std::vector<std::string>& cond = {});

// I(axes_a ; axes_b | axes_cond) in nats.
double mutual_information(const JointPmf& pmf, const std::vector<std::string>& axes_a,
                          const std::vector<std::string>& axes_b,
                          const std::vector<std::string>& axes_cond = {});

// Extends the pmf by one coordinate drawn through the channel; the
// marginal over the original axes is preserved exactly.
JointPmf attach_channel(const JointPmf& pmf, const CondChannel& chan);

// Product of pmfs over disjoint axis sets.
JointPmf tensor_product(const JointPmf& a, const JointPmf& b);

double linf_distance(const JointPmf& a, const JointPmf& b);

inline double nats_to_bits(double nats) { return nats / 0.6931471805599453; }
inline double bits_to_nats(double bits) { return bits * 0.6931471805599453; }

}  // namespace hyptest

#endif
