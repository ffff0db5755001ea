#ifndef HYPTEST_ZERO_RATE_HPP
#define HYPTEST_ZERO_RATE_HPP

#include <array>
#include <string>
#include <vector>

#include "hyptest/divmin.hpp"
#include "hyptest/pmf.hpp"

namespace hyptest {

enum class DetectionMode { coherent, concurrent };
enum class Mapping { same, different };

std::string to_string(DetectionMode mode);
std::string to_string(Mapping mapping);

// A finite Pareto-maximal set of exponent pairs, in nats, sorted by
// theta1 ascending. Rectangular regions carry exactly the corner point.
struct ExponentRegion {
  std::vector<std::array<double, 2>> points;
  bool is_rectangle = false;
  DetectionMode mode = DetectionMode::coherent;
  int w1 = 2;  // sensor alphabet tag; 3 stands for "3 or more"
  int w2 = 2;  // cooperation alphabet tag; 0 means no cooperation
};

struct PartitionSweepPoint {
  double r = 0.0;
  Mapping mapping = Mapping::different;
  double theta1 = 0.0;
  double theta2 = 0.0;
};

struct PartitionSweepResult {
  ExponentRegion region;
  std::vector<PartitionSweepPoint> sweep;
};

// Exponents of the two single-detector objectives as a function of the
// candidate X-marginal pi. The same rule is evaluated by the region
// sweep (on a simplex grid) and by the finite-blocklength simulator (on
// exact empirical types).
double e1_exponent(const HypothesisPair& pair, const std::vector<double>& pi);
double e2_exponent(const HypothesisPair& pair, const std::vector<double>& pi);

// Threshold rule assigning a non-typical X-marginal to the set whose
// message makes Detector 1 declare the alternative: e1(pi) + r >= e2(pi).
bool in_gamma_alt(const HypothesisPair& pair, const std::vector<double>& pi, double r);
bool in_gamma_alt(double e1, double e2, double r);

// All pmfs on a simplex of the given dimension with entries on a uniform
// grid of the given step, plus the listed extra points (deduplicated).
std::vector<std::vector<double>> simplex_grid(int dim, double step,
                                              const std::vector<std::vector<double>>& extra = {});

// Both detectors favour the same hypothesis; rectangle for any alphabet
// sizes W1, W2 >= 2.
ExponentRegion region_coherent(const HypothesisPair& pair);

// Opposite favoured hypotheses with equal X-marginals; rectangle.
ExponentRegion region_concurrent_equal_marginals(const HypothesisPair& pair);

// Opposite favoured hypotheses, distinct X-marginals, sensor alphabet of
// at least three; rectangle.
ExponentRegion region_concurrent_w1ge3(const HypothesisPair& pair);

// Opposite favoured hypotheses, distinct X-marginals, binary sensor
// alphabet: the exponents trade off. Sweeps a threshold grid over the
// partition rule and returns the Pareto frontier plus every sweep point.
PartitionSweepResult region_concurrent_w1eq2(const HypothesisPair& pair,
                                             double px_grid_step,
                                             const std::vector<double>& r_grid);

// Cooperation link removed (W2 = 0): Detector 2 is limited to the
// (X, Y2)-only objective.
ExponentRegion region_no_cooperation(const HypothesisPair& pair, DetectionMode mode);

// Increase of Detector 2's corner enabled by the cooperation bit.
double cooperation_benefit_zero_rate(const HypothesisPair& pair);

}  // namespace hyptest

#endif
