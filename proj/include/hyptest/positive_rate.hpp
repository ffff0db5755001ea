#ifndef HYPTEST_POSITIVE_RATE_HPP
#define HYPTEST_POSITIVE_RATE_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "hyptest/pmf.hpp"
#include "hyptest/zero_rate.hpp"

namespace hyptest {

// Communication rates in nats per source symbol.
struct RatePair {
  double r1 = 0.0;
  double r2 = 0.0;
};

// Operating point of the quantize-and-test schemes: U summarizes X at
// rate R1, V summarizes (Y1, U) at rate R2. The optional third channel
// quantizes X under the alternative law (concurrent detection with
// distinct X-marginals).
struct AuxChannels {
  CondChannel u_given_x;
  CondChannel v_given_uy1;
  std::optional<CondChannel> u1_given_x;
};

struct AuxExponents {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double rate_u = 0.0;   // I(U;X) under the null law
  double rate_v = 0.0;   // I(V;Y1|U) under the null law
  double rate_u1 = 0.0;  // I(U1;X) under the alternative law, when used
};

struct SearchConfig {
  int lambda_points = 33;
  int restarts = 64;
  int iters = 200;
  std::uint64_t seed = 0x9b1ce5ULL;
  int u_size = 0;  // 0 = |X| + 1 (support bound)
  int v_size = 0;  // 0 = |U|*|Y1| + 1
  std::vector<AuxChannels> seed_channels;  // extra warm starts
};

struct HighRateResult {
  ExponentRegion region;
  RatePair sufficient_rates;  // nats; add any epsilon margin on top
  double theta2_cooperative = 0.0;
  double theta2_no_cooperation = 0.0;
  double benefit = 0.0;  // E_P[ D(P_{Y1|XY2} || P_{Y1|XY2} under the alternative) ]
};

// Closed-form corners when both links can describe the full sequences.
HighRateResult high_rate_region(const HypothesisPair& pair, DetectionMode mode,
                                bool cooperative);

struct TiRegion {
  ExponentRegion region;
  std::vector<CondChannel> channels;  // achieving U-channel per point
  long long evaluations = 0;
};

// Optimal region for testing against independence (null: X drawn from
// P_{X|Y1 Y2} with independent Y1, Y2; alternative: full product law)
// at cooperation rate zero: Pareto frontier of
//   (I(U;Y1), I(U;Y1) + I(U;Y2))  over  I(U;X) <= r1, |U| = |X|+1.
// With cooperative=false the second coordinate is I(U;Y2) only.
TiRegion region_test_against_independence(const HypothesisPair& pair, double r1,
                                          const SearchConfig& search,
                                          bool cooperative = true);

// Direct maximization of the second coordinate alone (the lambda = 0
// scalarization), used to cross-check the frontier end point.
double ti_max_theta2(const HypothesisPair& pair, double r1, const SearchConfig& search,
                     bool cooperative = true);

// Exponents achieved by a fixed pair of auxiliary channels under
// coherent detection: two divergence minimizations over the constraint
// sets pinning (U,X), (U,Y1) resp. (U,X), (U,V,Y1), (U,V,Y2).
AuxExponents exponents_for_aux_coherent(const HypothesisPair& pair,
                                        const AuxChannels& aux);

// Concurrent-detection variant: theta2 is unchanged; theta1 swaps the
// roles of the laws (equal marginals) or uses the dedicated U1 channel
// (distinct marginals; requires aux.u1_given_x).
AuxExponents exponents_for_aux_concurrent(const HypothesisPair& pair,
                                          const AuxChannels& aux,
                                          bool equal_marginals);

struct AchievableRegion {
  ExponentRegion region;
  std::vector<AuxChannels> channels;  // aligned with region.points
  long long evaluations = 0;
};

// Random-restart coordinate-ascent search over rate-feasible channel
// pairs, traced over a scalarization grid. In concurrent mode with
// distinct X-marginals the two exponents decouple and the region is a
// rectangle.
AchievableRegion region_achievable(const HypothesisPair& pair, const RatePair& rates,
                                   DetectionMode mode, const SearchConfig& search);

// I(U;X) for a channel against a marginal, and the rate-boundary
// projection used to keep search iterates feasible.
double channel_mutual_information(const JointPmf& px, const CondChannel& chan);
CondChannel clamp_channel_rate(const JointPmf& px, CondChannel chan, double max_rate);

}  // namespace hyptest

#endif
