#ifndef HYPTEST_SIMULATOR_HPP
#define HYPTEST_SIMULATOR_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "hyptest/positive_rate.hpp"
#include "hyptest/zero_rate.hpp"

namespace hyptest {

// Finite-blocklength configuration of the fixed-alphabet schemes.
// Typicality is the L-infinity distance between the empirical type and
// the reference pmf. The optional per-terminal radii exist so that the
// degenerate-codebook reduction of the positive-rate scheme (radii
// mu/8, mu/4, mu) can be expressed as a zero-rate configuration.
struct ZeroRateSchemeConfig {
  int n = 16;
  double mu = 0.1;
  int w1 = 3;  // 2 or 3 ("3 or more"); ignored under coherent detection
  Mapping mapping = Mapping::different;
  double r = 0.0;  // threshold of the w1 = 2 partition rule
  DetectionMode mode = DetectionMode::coherent;
  std::optional<double> mu_x, mu_y1, mu_y2;
};

enum class EstimateMethod { exact, monte_carlo };

struct ErrorEstimate {
  double alpha1 = 0.0, beta1 = 0.0, alpha2 = 0.0, beta2 = 0.0;
  double exp_beta1 = 0.0, exp_beta2 = 0.0;  // -(1/n) log beta, nats
  double ci95_alpha1 = 0.0, ci95_beta1 = 0.0, ci95_alpha2 = 0.0, ci95_beta2 = 0.0;
  EstimateMethod method = EstimateMethod::exact;
  int n = 0;
  long long trials = 0;  // per hypothesis; 0 for the exact method
};

// Exact error probabilities of the zero-rate schemes by enumeration of
// all joint types at blocklength n, with type-class probabilities summed
// in the log domain. Refuses instances beyond the enumeration budget.
ErrorEstimate exact_zero_rate_errors(const HypothesisPair& pair,
                                     const ZeroRateSchemeConfig& config);

// Same decision maps applied to sampled sequences; Wilson 95% intervals;
// bit-reproducible for a fixed seed.
ErrorEstimate monte_carlo_zero_rate(const HypothesisPair& pair,
                                    const ZeroRateSchemeConfig& config,
                                    long long trials, std::uint64_t seed);

// Asymptotic exponent pair matching a scheme configuration.
std::pair<double, double> theoretical_exponents(const HypothesisPair& pair,
                                                const ZeroRateSchemeConfig& config,
                                                double px_grid_step = 0.01);

struct ConvergenceRow {
  int n = 0;
  ErrorEstimate estimate;
  double theta1_theory = 0.0;
  double theta2_theory = 0.0;
};

// Runs the exact evaluator (or the Monte-Carlo fallback past the budget)
// over an ascending list of blocklengths and pairs each estimate with
// the asymptotic exponents of the matching region point.
std::vector<ConvergenceRow> exponent_convergence_sweep(
    const HypothesisPair& pair, const ZeroRateSchemeConfig& config_template,
    const std::vector<int>& n_list, long long mc_trials = 100000,
    std::uint64_t seed = 1);

struct PositiveRateSchemeConfig {
  int n = 16;
  double mu = 0.2;
  RatePair rates;  // nats per symbol
  DetectionMode mode = DetectionMode::coherent;
  // Evaluate the alternative-law sensor test before the null-law one;
  // with disjoint typical sets the estimates are bit-identical, which a
  // regression test asserts on small instances.
  bool alt_test_first = false;
  int batch_size = 256;  // codebooks are redrawn per batch
};

// Monte-Carlo simulation of the random-coding scheme: superposed
// codebooks, typicality encoder and decoders, ensemble-averaged over
// fresh codebooks per batch.
ErrorEstimate monte_carlo_positive_rate(const HypothesisPair& pair,
                                        const AuxChannels& aux,
                                        const PositiveRateSchemeConfig& config,
                                        long long trials, std::uint64_t seed);

}  // namespace hyptest

#endif
