#include "hyptest/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "hyptest/parallel.hpp"
#include "hyptest/rng.hpp"

namespace hyptest {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kTypeBudget = 130000000;  // enumerated joint types

const char* kX = "X";
const char* kY1 = "Y1";
const char* kY2 = "Y2";

std::vector<std::string> ax(std::initializer_list<const char*> names) {
  return std::vector<std::string>(names.begin(), names.end());
}

// Running log-sum-exp accumulator.
struct LogSum {
  double peak = kNegInf;
  double scaled = 0.0;
  void add(double logv) {
    if (logv == kNegInf) return;
    if (logv <= peak) {
      scaled += std::exp(logv - peak);
    } else {
      scaled = scaled * std::exp(peak - logv) + 1.0;
      peak = logv;
    }
  }
  void merge(const LogSum& o) {
    if (o.peak == kNegInf) return;
    if (o.peak <= peak) {
      scaled += o.scaled * std::exp(o.peak - peak);
    } else {
      scaled = scaled * std::exp(peak - o.peak) + o.scaled;
      peak = o.peak;
    }
  }
  double log_value() const {
    return scaled <= 0.0 ? kNegInf : peak + std::log(scaled);
  }
  double value() const { return scaled <= 0.0 ? 0.0 : std::exp(log_value()); }
};

// Lexicographic rank of a composition of n into k parts.
class CompositionIndex {
 public:
  CompositionIndex(int parts, int total) : k_(parts), n_(total) {
    binom_.assign(static_cast<std::size_t>(n_ + k_ + 1),
                  std::vector<double>(static_cast<std::size_t>(k_ + 1), 0.0));
    for (int a = 0; a <= n_ + k_; ++a) {
      binom_[static_cast<std::size_t>(a)][0] = 1.0;
      for (int b = 1; b <= k_ && b <= a; ++b)
        binom_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
            binom_[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b - 1)] +
            (a - 1 >= b ? binom_[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b)]
                        : 0.0);
    }
  }

  std::size_t count() const {
    return static_cast<std::size_t>(
        binom_[static_cast<std::size_t>(n_ + k_ - 1)][static_cast<std::size_t>(k_ - 1)]);
  }

  std::size_t rank(const int* counts) const {
    if (k_ == 2) return static_cast<std::size_t>(counts[0]);
    std::size_t r = 0;
    int left = n_;
    for (int i = 0; i < k_ - 1; ++i) {
      int rem_parts = k_ - i - 1;
      for (int v = 0; v < counts[i]; ++v)
        r += static_cast<std::size_t>(
            binom_[static_cast<std::size_t>(left - v + rem_parts - 1)]
                  [static_cast<std::size_t>(rem_parts - 1)]);
      left -= counts[i];
    }
    return r;
  }

 private:
  int k_, n_;
  std::vector<std::vector<double>> binom_;
};

double composition_count(int parts, int total) {
  double lg = std::lgamma(total + parts) - std::lgamma(static_cast<double>(parts)) -
              std::lgamma(total + 1.0);
  return std::exp(lg);
}

bool counts_typical(const int* counts, const std::vector<double>& ref, int n,
                    double radius) {
  for (std::size_t s = 0; s < ref.size(); ++s)
    if (std::fabs(static_cast<double>(counts[s]) - n * ref[s]) > n * radius + 1e-12)
      return false;
  return true;
}

// Decision maps of every fixed-alphabet scheme, as functions of the
// three marginal types. One instance is shared between the exact
// enumerator and the Monte-Carlo sampler so both run the same rule, and
// the w1 = 2 partition memberships come from the zero_rate evaluators at
// the exact empirical marginal (no grid snapping).
class ZeroRateScheme {
 public:
  ZeroRateScheme(const HypothesisPair& pair, const ZeroRateSchemeConfig& config)
      : cfg_(config),
        px_(marginal(pair.p, ax({kX})).probs()),
        px_bar_(marginal(pair.p_bar, ax({kX})).probs()),
        py1_(marginal(pair.p, ax({kY1})).probs()),
        py1_bar_(marginal(pair.p_bar, ax({kY1})).probs()),
        py2_(marginal(pair.p, ax({kY2})).probs()) {
    if (config.n < 1) throw validation_error("simulator: blocklength must be positive");
    if (!(config.mu > 0.0)) throw validation_error("simulator: mu must be positive");
    if (config.w1 != 2 && config.w1 != 3)
      throw validation_error("simulator: w1 must be 2 or 3");
    mu_x_ = config.mu_x.value_or(config.mu);
    mu_y1_ = config.mu_y1.value_or(config.mu);
    mu_y2_ = config.mu_y2.value_or(config.mu);

    equal_marginals_ = true;
    double gap = 0.0;
    for (std::size_t i = 0; i < px_.size(); ++i)
      gap = std::max(gap, std::fabs(px_[i] - px_bar_[i]));
    equal_marginals_ = gap < 1e-9;

    if (cfg_.mode == DetectionMode::concurrent && !equal_marginals_ &&
        2.0 * mu_x_ >= gap)
      throw precondition_error(
          "typicality radius too large: the X-typical sets of the two laws "
          "must not intersect (need 2*mu < max-norm gap of the X-marginals)");

    if (cfg_.mode == DetectionMode::concurrent && !equal_marginals_ && cfg_.w1 == 2) {
      // Partition of the non-typical X-types, evaluated on the exact
      // n-type lattice with the same rule the asymptotic sweep uses.
      CompositionIndex indexer(static_cast<int>(px_.size()), cfg_.n);
      gamma_alt_.assign(indexer.count(), 0);
      std::vector<std::vector<int>> types;
      std::vector<int> c(px_.size(), 0);
      enumerate_types(static_cast<int>(px_.size()), cfg_.n, c, types);
      std::vector<unsigned char> result(types.size(), 0);
      parallel_for(types.size(), [&](std::size_t i) {
        std::vector<double> pi(px_.size());
        for (std::size_t s = 0; s < px_.size(); ++s)
          pi[s] = static_cast<double>(types[i][s]) / cfg_.n;
        if (cfg_.mapping == Mapping::same) {
          result[i] = 0;  // every non-typical type answers the reject message
        } else {
          result[i] = in_gamma_alt(pair, pi, cfg_.r) ? 1 : 0;
        }
      });
      for (std::size_t i = 0; i < types.size(); ++i)
        gamma_alt_[indexer.rank(types[i].data())] = result[i];
      x_indexer_ = std::make_unique<CompositionIndex>(static_cast<int>(px_.size()),
                                                      cfg_.n);
    }
  }

  struct Decision {
    bool h1_alt = false;   // detector 1 declares the alternative
    bool h2_null = false;  // detector 2 declares the null
  };

  Decision decide(const int* cx, const int* cy1, const int* cy2) const {
    const int n = cfg_.n;
    bool tx_p = counts_typical(cx, px_, n, mu_x_);
    bool ty1_p = counts_typical(cy1, py1_, n, mu_y1_);
    bool ty2_p = counts_typical(cy2, py2_, n, mu_y2_);

    Decision d;
    if (cfg_.mode == DetectionMode::coherent) {
      bool accept1 = tx_p && ty1_p;
      d.h1_alt = !accept1;
      d.h2_null = accept1 && ty2_p;
      return d;
    }
    bool ty1_pb = counts_typical(cy1, py1_bar_, n, mu_y1_);
    if (equal_marginals_) {
      d.h1_alt = tx_p && ty1_pb;
      d.h2_null = tx_p && ty1_p && ty2_p;
      return d;
    }
    bool tx_pb = counts_typical(cx, px_bar_, n, mu_x_);
    if (cfg_.w1 == 3) {
      int m1 = tx_p ? 0 : (tx_pb ? 1 : 2);
      d.h1_alt = (m1 == 1) && ty1_pb;
      d.h2_null = (m1 == 0) && ty1_p && ty2_p;
      return d;
    }
    // w1 == 2: one bit, non-typical types split by the threshold rule.
    int b0 = 0;
    int b1 = cfg_.mapping == Mapping::different ? 1 : 0;
    int msg;
    if (tx_p) {
      msg = b0;
    } else if (tx_pb) {
      msg = b1;
    } else if (cfg_.mapping == Mapping::same) {
      msg = 1;  // all remaining types carry the reject message
    } else {
      msg = gamma_alt_[x_indexer_->rank(cx)] ? 1 : 0;
    }
    d.h1_alt = (msg == b1) && ty1_pb;
    d.h2_null = (msg == b0) && ty1_p && ty2_p;
    return d;
  }

  bool concurrent() const { return cfg_.mode == DetectionMode::concurrent; }

 private:
  static void enumerate_types(int parts, int total, std::vector<int>& c,
                              std::vector<std::vector<int>>& out, int pos = 0,
                              int left = -1) {
    if (left < 0) left = total;
    if (pos == parts - 1) {
      c[static_cast<std::size_t>(pos)] = left;
      out.push_back(c);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      c[static_cast<std::size_t>(pos)] = v;
      enumerate_types(parts, total, c, out, pos + 1, left - v);
    }
  }

  ZeroRateSchemeConfig cfg_;
  std::vector<double> px_, px_bar_, py1_, py1_bar_, py2_;
  double mu_x_ = 0.0, mu_y1_ = 0.0, mu_y2_ = 0.0;
  bool equal_marginals_ = false;
  std::vector<unsigned char> gamma_alt_;
  std::unique_ptr<CompositionIndex> x_indexer_;
};

struct EventLogProbs {
  // [law][h1_alt][h2_null], law 0 = null, 1 = alternative
  LogSum acc[2][2][2];
};

double wilson_halfwidth(long long hits, long long trials) {
  if (trials <= 0) return 0.0;
  const double z = 1.959963984540054;
  double n = static_cast<double>(trials);
  double p = static_cast<double>(hits) / n;
  return z / (1.0 + z * z / n) *
         std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n));
}

ErrorEstimate assemble(const HypothesisPair&, const ZeroRateSchemeConfig& config,
                       double log_p[2][2][2], const long long counts[2][2][2],
                       long long trials) {
  // Event probabilities by law: prob[law][h1][h2].
  auto prob = [&](int law, int h1, int h2) {
    if (trials > 0)
      return static_cast<double>(counts[law][h1][h2]) / static_cast<double>(trials);
    return std::exp(log_p[law][h1][h2]);
  };
  auto log_prob_h2 = [&](int law, int h2) {
    if (trials > 0) {
      double p = prob(law, 0, h2) + prob(law, 1, h2);
      return p <= 0.0 ? kNegInf : std::log(p);
    }
    LogSum s;
    s.add(log_p[law][0][h2]);
    s.add(log_p[law][1][h2]);
    return s.log_value();
  };
  auto log_prob_h1 = [&](int law, int h1) {
    if (trials > 0) {
      double p = prob(law, h1, 0) + prob(law, h1, 1);
      return p <= 0.0 ? kNegInf : std::log(p);
    }
    LogSum s;
    s.add(log_p[law][h1][0]);
    s.add(log_p[law][h1][1]);
    return s.log_value();
  };

  ErrorEstimate est;
  est.n = config.n;
  est.trials = trials;
  est.method = trials > 0 ? EstimateMethod::monte_carlo : EstimateMethod::exact;

  double log_beta1, log_beta2;
  if (config.mode == DetectionMode::coherent) {
    // favoured hypothesis of detector 1 is the alternative
    est.alpha1 = std::exp(log_prob_h1(0, 1));
    log_beta1 = log_prob_h1(1, 0);
  } else {
    est.alpha1 = std::exp(log_prob_h1(1, 0));
    log_beta1 = log_prob_h1(0, 1);
  }
  est.beta1 = std::exp(log_beta1);
  est.alpha2 = std::exp(log_prob_h2(0, 0));  // detector 2 rejects under the null
  log_beta2 = log_prob_h2(1, 1);
  est.beta2 = std::exp(log_beta2);
  est.exp_beta1 = log_beta1 == kNegInf
                      ? std::numeric_limits<double>::infinity()
                      : -log_beta1 / config.n;
  est.exp_beta2 = log_beta2 == kNegInf
                      ? std::numeric_limits<double>::infinity()
                      : -log_beta2 / config.n;

  if (trials > 0) {
    auto hits = [&](int law, int want_h1, int want_h2) {
      long long h = 0;
      for (int h1 = 0; h1 < 2; ++h1)
        for (int h2 = 0; h2 < 2; ++h2)
          if ((want_h1 < 0 || h1 == want_h1) && (want_h2 < 0 || h2 == want_h2))
            h += counts[law][h1][h2];
      return h;
    };
    if (config.mode == DetectionMode::coherent) {
      est.ci95_alpha1 = wilson_halfwidth(hits(0, 1, -1), trials);
      est.ci95_beta1 = wilson_halfwidth(hits(1, 0, -1), trials);
    } else {
      est.ci95_alpha1 = wilson_halfwidth(hits(1, 0, -1), trials);
      est.ci95_beta1 = wilson_halfwidth(hits(0, 1, -1), trials);
    }
    est.ci95_alpha2 = wilson_halfwidth(hits(0, -1, 0), trials);
    est.ci95_beta2 = wilson_halfwidth(hits(1, -1, 1), trials);
  }
  return est;
}

struct CellDecomp {
  std::vector<int> to_x, to_y1, to_y2;
  int nx = 0, ny1 = 0, ny2 = 0;
};

CellDecomp decompose_cells(const HypothesisPair& pair) {
  CellDecomp d;
  d.nx = pair.p.axis_sizes()[0];
  d.ny1 = pair.p.axis_sizes()[1];
  d.ny2 = pair.p.axis_sizes()[2];
  std::size_t cells = pair.p.cell_count();
  d.to_x.resize(cells);
  d.to_y1.resize(cells);
  d.to_y2.resize(cells);
  std::vector<int> idx(3);
  for (std::size_t i = 0; i < cells; ++i) {
    pair.p.decode(i, idx);
    d.to_x[i] = idx[0];
    d.to_y1[i] = idx[1];
    d.to_y2[i] = idx[2];
  }
  return d;
}

}  // namespace

ErrorEstimate exact_zero_rate_errors(const HypothesisPair& pair,
                                     const ZeroRateSchemeConfig& config) {
  const int k = static_cast<int>(pair.p.cell_count());
  if (k > 12 || config.n > 40 ||
      composition_count(k, config.n) > static_cast<double>(kTypeBudget))
    throw resource_error(
        "exact enumeration budget exceeded (joint alphabet x blocklength); "
        "use the Monte-Carlo estimator instead");

  ZeroRateScheme scheme(pair, config);
  CellDecomp cells = decompose_cells(pair);
  const int n = config.n;

  // Per-cell log-prob and log-factorial tables.
  std::vector<double> lgf(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i) lgf[static_cast<std::size_t>(i)] = std::lgamma(i + 1.0);
  std::vector<double> logp(static_cast<std::size_t>(k)), logpb(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    logp[static_cast<std::size_t>(i)] =
        pair.p[static_cast<std::size_t>(i)] > kSupportEps
            ? std::log(pair.p[static_cast<std::size_t>(i)])
            : kNegInf;
    logpb[static_cast<std::size_t>(i)] =
        pair.p_bar[static_cast<std::size_t>(i)] > kSupportEps
            ? std::log(pair.p_bar[static_cast<std::size_t>(i)])
            : kNegInf;
  }

  // Enumerate compositions of n over the k cells, parallel over the
  // count of cell 0; every chunk keeps its own accumulators and chunks
  // are merged in order, so the reduction is deterministic.
  std::vector<EventLogProbs> chunks(static_cast<std::size_t>(n + 1));
  parallel_for(static_cast<std::size_t>(n + 1), [&](std::size_t c0) {
    EventLogProbs& acc = chunks[c0];
    std::vector<int> mx(static_cast<std::size_t>(cells.nx), 0);
    std::vector<int> my1(static_cast<std::size_t>(cells.ny1), 0);
    std::vector<int> my2(static_cast<std::size_t>(cells.ny2), 0);
    std::vector<int> count(static_cast<std::size_t>(k), 0);

    double logw_p = lgf[static_cast<std::size_t>(n)];
    double logw_pb = logw_p;
    int dead_p = 0, dead_pb = 0;  // cells with zero prob but positive count

    auto apply = [&](int cell, int c, int sign) {
      auto cz = static_cast<std::size_t>(cell);
      mx[static_cast<std::size_t>(cells.to_x[cz])] += sign * c;
      my1[static_cast<std::size_t>(cells.to_y1[cz])] += sign * c;
      my2[static_cast<std::size_t>(cells.to_y2[cz])] += sign * c;
      if (c > 0) {
        if (logp[cz] == kNegInf)
          dead_p += sign;
        else
          logw_p += sign * (c * logp[cz] - lgf[static_cast<std::size_t>(c)]);
        if (logpb[cz] == kNegInf)
          dead_pb += sign;
        else
          logw_pb += sign * (c * logpb[cz] - lgf[static_cast<std::size_t>(c)]);
      }
    };

    auto leaf = [&] {
      auto d = scheme.decide(mx.data(), my1.data(), my2.data());
      int h1 = d.h1_alt ? 1 : 0;
      int h2 = d.h2_null ? 1 : 0;
      if (dead_p == 0) acc.acc[0][h1][h2].add(logw_p);
      if (dead_pb == 0) acc.acc[1][h1][h2].add(logw_pb);
    };

    std::function<void(int, int)> rec = [&](int cell, int left) {
      if (cell == k - 1) {
        apply(cell, left, +1);
        count[static_cast<std::size_t>(cell)] = left;
        leaf();
        apply(cell, left, -1);
        return;
      }
      for (int c = 0; c <= left; ++c) {
        apply(cell, c, +1);
        rec(cell + 1, left - c);
        apply(cell, c, -1);
      }
    };

    apply(0, static_cast<int>(c0), +1);
    if (k == 1) {
      leaf();
    } else {
      rec(1, n - static_cast<int>(c0));
    }
    apply(0, static_cast<int>(c0), -1);
  });

  double log_p[2][2][2];
  for (int law = 0; law < 2; ++law)
    for (int h1 = 0; h1 < 2; ++h1)
      for (int h2 = 0; h2 < 2; ++h2) {
        LogSum total;
        for (auto& chunk : chunks) total.merge(chunk.acc[law][h1][h2]);
        log_p[law][h1][h2] = total.log_value();
      }
  const long long counts_dummy[2][2][2] = {};
  return assemble(pair, config, log_p, counts_dummy, 0);
}

ErrorEstimate monte_carlo_zero_rate(const HypothesisPair& pair,
                                    const ZeroRateSchemeConfig& config,
                                    long long trials, std::uint64_t seed) {
  if (trials < 1000)
    throw validation_error("monte carlo: need at least 1000 trials per hypothesis");
  ZeroRateScheme scheme(pair, config);
  CellDecomp cells = decompose_cells(pair);
  const int k = static_cast<int>(pair.p.cell_count());
  const int n = config.n;

  std::vector<double> cdf_p(pair.p.probs().begin(), pair.p.probs().end());
  std::vector<double> cdf_pb(pair.p_bar.probs().begin(), pair.p_bar.probs().end());
  for (int i = 1; i < k; ++i) {
    cdf_p[static_cast<std::size_t>(i)] += cdf_p[static_cast<std::size_t>(i - 1)];
    cdf_pb[static_cast<std::size_t>(i)] += cdf_pb[static_cast<std::size_t>(i - 1)];
  }

  const long long kBatch = 4096;
  const long long n_batches = (trials + kBatch - 1) / kBatch;
  std::vector<std::array<long long, 8>> tallies(static_cast<std::size_t>(n_batches));

  parallel_for(static_cast<std::size_t>(n_batches), [&](std::size_t b) {
    Rng rng = Rng::stream(seed, b);
    std::array<long long, 8> tally{};
    long long lo = static_cast<long long>(b) * kBatch;
    long long hi = std::min(trials, lo + kBatch);
    std::vector<int> mx(static_cast<std::size_t>(cells.nx));
    std::vector<int> my1(static_cast<std::size_t>(cells.ny1));
    std::vector<int> my2(static_cast<std::size_t>(cells.ny2));
    for (long long t = lo; t < hi; ++t) {
      for (int law = 0; law < 2; ++law) {
        const auto& cdf = law == 0 ? cdf_p : cdf_pb;
        std::fill(mx.begin(), mx.end(), 0);
        std::fill(my1.begin(), my1.end(), 0);
        std::fill(my2.begin(), my2.end(), 0);
        for (int j = 0; j < n; ++j) {
          int cell = rng.sample_cdf(cdf);
          ++mx[static_cast<std::size_t>(cells.to_x[static_cast<std::size_t>(cell)])];
          ++my1[static_cast<std::size_t>(cells.to_y1[static_cast<std::size_t>(cell)])];
          ++my2[static_cast<std::size_t>(cells.to_y2[static_cast<std::size_t>(cell)])];
        }
        auto d = scheme.decide(mx.data(), my1.data(), my2.data());
        int h1 = d.h1_alt ? 1 : 0;
        int h2 = d.h2_null ? 1 : 0;
        ++tally[static_cast<std::size_t>(law * 4 + h1 * 2 + h2)];
      }
    }
    tallies[b] = tally;
  });

  long long counts[2][2][2] = {};
  for (const auto& tally : tallies)
    for (int law = 0; law < 2; ++law)
      for (int h1 = 0; h1 < 2; ++h1)
        for (int h2 = 0; h2 < 2; ++h2)
          counts[law][h1][h2] += tally[static_cast<std::size_t>(law * 4 + h1 * 2 + h2)];

  double log_p_dummy[2][2][2] = {};
  return assemble(pair, config, log_p_dummy, counts, trials);
}

std::pair<double, double> theoretical_exponents(const HypothesisPair& pair,
                                                const ZeroRateSchemeConfig& config,
                                                double px_grid_step) {
  if (config.mode == DetectionMode::coherent) {
    auto region = region_coherent(pair);
    return {region.points[0][0], region.points[0][1]};
  }
  if (pair.equal_x_marginals()) {
    auto region = region_concurrent_equal_marginals(pair);
    return {region.points[0][0], region.points[0][1]};
  }
  if (config.w1 == 3) {
    auto region = region_concurrent_w1ge3(pair);
    return {region.points[0][0], region.points[0][1]};
  }
  auto sweep = region_concurrent_w1eq2(pair, px_grid_step, {config.r});
  for (const auto& pt : sweep.sweep)
    if (pt.mapping == config.mapping) return {pt.theta1, pt.theta2};
  throw error("theoretical_exponents: sweep did not produce the requested mapping");
}

std::vector<ConvergenceRow> exponent_convergence_sweep(
    const HypothesisPair& pair, const ZeroRateSchemeConfig& config_template,
    const std::vector<int>& n_list, long long mc_trials, std::uint64_t seed) {
  if (!std::is_sorted(n_list.begin(), n_list.end()))
    throw validation_error("convergence sweep: blocklengths must be ascending");
  auto [t1, t2] = theoretical_exponents(pair, config_template);
  std::vector<ConvergenceRow> rows;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    ZeroRateSchemeConfig config = config_template;
    config.n = n_list[i];
    ConvergenceRow row;
    row.n = config.n;
    row.theta1_theory = t1;
    row.theta2_theory = t2;
    const int k = static_cast<int>(pair.p.cell_count());
    if (k <= 12 && config.n <= 40 &&
        composition_count(k, config.n) <= static_cast<double>(kTypeBudget)) {
      row.estimate = exact_zero_rate_errors(pair, config);
    } else {
      row.estimate = monte_carlo_zero_rate(pair, config, mc_trials, seed + i);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---- positive-rate random-coding simulation ------------------------------

namespace {

struct RefTables {
  int nx = 0, ny1 = 0, ny2 = 0, nu = 0, nv = 0, nu1 = 0;
  std::vector<double> p_ux, p_uy1, pb_uy1;    // [x][u], [y1][u]
  std::vector<double> p_uvy1, p_uvy2;         // [y1][u][v], [y2][u][v]
  std::vector<double> pb_u1x, pb_u1y1;        // [x][u1], [y1][u1]
  std::vector<double> cdf_u;                  // sampling P_U
  std::vector<double> cdf_v_given_u;          // [u][v] cumulative
  std::vector<double> cdf_u1;                 // sampling alternative U1
  std::vector<double> cdf_p, cdf_pb;          // source sampling
};

}  // namespace

ErrorEstimate monte_carlo_positive_rate(const HypothesisPair& pair,
                                        const AuxChannels& aux,
                                        const PositiveRateSchemeConfig& config,
                                        long long trials, std::uint64_t seed) {
  if (trials < 1000)
    throw validation_error("monte carlo: need at least 1000 trials per hypothesis");
  if (!(config.mu > 0.0)) throw validation_error("simulator: mu must be positive");
  if (config.n < 1) throw validation_error("simulator: blocklength must be positive");
  if (config.rates.r1 < 0.0 || config.rates.r2 < 0.0)
    throw validation_error("rates must be nonnegative");
  double nats = config.n * (config.rates.r1 + config.rates.r2);
  if (nats > 26.0)
    throw resource_error("codebook budget exceeded: n*(R1+R2) must stay below "
                         "26 nats");
  const long long m1_count =
      std::max<long long>(1, static_cast<long long>(std::floor(std::exp(config.n * config.rates.r1))));
  const long long m2_count =
      std::max<long long>(1, static_cast<long long>(std::floor(std::exp(config.n * config.rates.r2))));
  if ((m1_count + m2_count) * static_cast<long long>(config.n) > (1LL << 27))
    throw resource_error("codebook budget exceeded: codeword storage too large");

  const bool concurrent = config.mode == DetectionMode::concurrent;
  const bool equal = pair.equal_x_marginals();
  const bool third_codebook = concurrent && !equal;
  if (third_codebook && !aux.u1_given_x.has_value())
    throw validation_error(
        "concurrent detection with distinct X-marginals needs the U1 channel");

  RefTables ref;
  ref.nx = pair.p.axis_sizes()[0];
  ref.ny1 = pair.p.axis_sizes()[1];
  ref.ny2 = pair.p.axis_sizes()[2];
  ref.nu = aux.u_given_x.output_size;
  ref.nv = aux.v_given_uy1.output_size;

  JointPmf p4 = attach_channel(pair.p, aux.u_given_x);
  JointPmf p5 = attach_channel(p4, aux.v_given_uy1);
  JointPmf pb4 = attach_channel(pair.p_bar, aux.u_given_x);
  ref.p_ux = marginal(p4, ax({"X", "U"})).probs();
  ref.p_uy1 = marginal(p4, ax({"Y1", "U"})).probs();
  ref.pb_uy1 = marginal(pb4, ax({"Y1", "U"})).probs();
  ref.p_uvy1 = marginal(p5, ax({"Y1", "U", "V"})).probs();
  ref.p_uvy2 = marginal(p5, ax({"Y2", "U", "V"})).probs();

  std::vector<double> p_u = marginal(p4, ax({"U"})).probs();
  ref.cdf_u = p_u;
  for (int u = 1; u < ref.nu; ++u)
    ref.cdf_u[static_cast<std::size_t>(u)] += ref.cdf_u[static_cast<std::size_t>(u - 1)];
  // V is superposed on U: entries drawn from P_{V|U}.
  std::vector<double> p_uv = marginal(p5, ax({"U", "V"})).probs();
  ref.cdf_v_given_u.assign(static_cast<std::size_t>(ref.nu * ref.nv), 0.0);
  for (int u = 0; u < ref.nu; ++u) {
    double pu = p_u[static_cast<std::size_t>(u)];
    double run = 0.0;
    for (int v = 0; v < ref.nv; ++v) {
      double c = pu > kSupportEps
                     ? p_uv[static_cast<std::size_t>(u * ref.nv + v)] / pu
                     : (v == 0 ? 1.0 : 0.0);
      run += c;
      ref.cdf_v_given_u[static_cast<std::size_t>(u * ref.nv + v)] = run;
    }
  }

  if (third_codebook) {
    ref.nu1 = aux.u1_given_x->output_size;
    JointPmf pb4u1 =
        attach_channel(marginal(pair.p_bar, ax({"X", "Y1"})), *aux.u1_given_x);
    ref.pb_u1x = marginal(pb4u1, ax({"X", "U1"})).probs();
    ref.pb_u1y1 = marginal(pb4u1, ax({"Y1", "U1"})).probs();
    ref.cdf_u1 = marginal(pb4u1, ax({"U1"})).probs();
    for (int u = 1; u < ref.nu1; ++u)
      ref.cdf_u1[static_cast<std::size_t>(u)] +=
          ref.cdf_u1[static_cast<std::size_t>(u - 1)];

    // Mutual exclusion of the two sensor tests: joint typicality at
    // radius mu/8 pins the X-type within |U| * mu/8 of each marginal.
    double gap = 0.0;
    JointPmf px = marginal(pair.p, ax({"X"}));
    JointPmf pxb = marginal(pair.p_bar, ax({"X"}));
    for (int x = 0; x < ref.nx; ++x)
      gap = std::max(gap, std::fabs(px[static_cast<std::size_t>(x)] -
                                    pxb[static_cast<std::size_t>(x)]));
    if (std::max(ref.nu, ref.nu1) * config.mu / 4.0 >= gap)
      throw precondition_error(
          "typicality radius too large: the two sensor tests must be "
          "mutually exclusive (shrink mu or separate the X-marginals)");
  }

  ref.cdf_p = pair.p.probs();
  ref.cdf_pb = pair.p_bar.probs();
  for (std::size_t i = 1; i < ref.cdf_p.size(); ++i) {
    ref.cdf_p[i] += ref.cdf_p[i - 1];
    ref.cdf_pb[i] += ref.cdf_pb[i - 1];
  }

  const int n = config.n;
  const int batch = std::max(config.batch_size, 1);
  const long long n_batches = (trials + batch - 1) / batch;
  CellDecomp cells = decompose_cells(pair);

  auto typical2 = [n](const std::vector<int>& counts, const std::vector<double>& refp,
                      double radius) {
    for (std::size_t i = 0; i < refp.size(); ++i)
      if (std::fabs(static_cast<double>(counts[i]) - n * refp[i]) > n * radius + 1e-12)
        return false;
    return true;
  };

  std::vector<std::array<long long, 8>> tallies(static_cast<std::size_t>(n_batches));

  parallel_for(static_cast<std::size_t>(n_batches), [&](std::size_t b) {
    std::array<long long, 8> tally{};
    // Fresh codebooks per batch, on streams keyed by the batch index so
    // results do not depend on the thread schedule.
    Rng cb_rng = Rng::stream(seed ^ 0xc0defeedULL, b);
    std::vector<int> cu(static_cast<std::size_t>(m1_count) * static_cast<std::size_t>(n));
    for (auto& s : cu) s = cb_rng.sample_cdf(ref.cdf_u);
    std::vector<int> cu1;
    if (third_codebook) {
      cu1.resize(cu.size());
      for (auto& s : cu1) s = cb_rng.sample_cdf(ref.cdf_u1);
    }
    // The superposed codebooks are drawn lazily per conditioning index,
    // from streams keyed by (batch, m1): identical content no matter
    // which trial touches them first.
    std::unordered_map<long long, std::vector<int>> cv;
    auto v_codebook = [&](long long m1) -> const std::vector<int>& {
      auto it = cv.find(m1);
      if (it != cv.end()) return it->second;
      Rng row_rng = Rng::stream(seed ^ 0x5e1ec7edULL,
                                b * 0x100000000ULL + static_cast<std::uint64_t>(m1));
      std::vector<int> rows(static_cast<std::size_t>(m2_count) * static_cast<std::size_t>(n));
      const int* u = cu.data() + static_cast<std::size_t>(m1) * static_cast<std::size_t>(n);
      for (long long m2 = 0; m2 < m2_count; ++m2)
        for (int j = 0; j < n; ++j) {
          std::span<const double> cdf(
              ref.cdf_v_given_u.data() + static_cast<std::size_t>(u[j]) * static_cast<std::size_t>(ref.nv),
              static_cast<std::size_t>(ref.nv));
          rows[static_cast<std::size_t>(m2) * static_cast<std::size_t>(n) +
               static_cast<std::size_t>(j)] = row_rng.sample_cdf(cdf);
        }
      return cv.emplace(m1, std::move(rows)).first->second;
    };

    std::vector<int> xs(static_cast<std::size_t>(n)), y1s(static_cast<std::size_t>(n)),
        y2s(static_cast<std::size_t>(n));
    std::vector<int> joint_counts;
    std::vector<long long> cands;

    long long lo = static_cast<long long>(b) * batch;
    long long hi = std::min(trials, lo + batch);
    for (long long t = lo; t < hi; ++t) {
      Rng rng = Rng::stream(seed ^ 0x7261b217ULL, static_cast<std::uint64_t>(t));
      for (int law = 0; law < 2; ++law) {
        const auto& cdf = law == 0 ? ref.cdf_p : ref.cdf_pb;
        for (int j = 0; j < n; ++j) {
          int cell = rng.sample_cdf(cdf);
          xs[static_cast<std::size_t>(j)] = cells.to_x[static_cast<std::size_t>(cell)];
          y1s[static_cast<std::size_t>(j)] = cells.to_y1[static_cast<std::size_t>(cell)];
          y2s[static_cast<std::size_t>(j)] = cells.to_y2[static_cast<std::size_t>(cell)];
        }

        auto count_pair = [&](const int* a, int na, const std::vector<int>& s, int ns) {
          joint_counts.assign(static_cast<std::size_t>(na * ns), 0);
          for (int j = 0; j < n; ++j)
            ++joint_counts[static_cast<std::size_t>(s[static_cast<std::size_t>(j)] * na +
                                                    a[j])];
        };
        // sensor: null-law codebook test at radius mu/8
        auto u_test = [&](const std::vector<int>& book, const std::vector<double>& refp,
                          int na) {
          cands.clear();
          for (long long m1 = 0; m1 < m1_count; ++m1) {
            const int* cw = book.data() + static_cast<std::size_t>(m1) * static_cast<std::size_t>(n);
            count_pair(cw, na, xs, ref.nx);
            if (typical2(joint_counts, refp, config.mu / 8.0)) cands.push_back(m1);
          }
          if (cands.empty()) return static_cast<long long>(-1);
          return cands[static_cast<std::size_t>(rng.next_below(static_cast<int>(cands.size())))];
        };

        long long m1 = -1;
        int sensor_kind = 0;  // 0: none, 1: null codebook, 2: alternative codebook
        if (!third_codebook) {
          m1 = u_test(cu, ref.p_ux, ref.nu);
          sensor_kind = m1 >= 0 ? 1 : 0;
        } else if (!config.alt_test_first) {
          m1 = u_test(cu, ref.p_ux, ref.nu);
          sensor_kind = m1 >= 0 ? 1 : 0;
          if (m1 < 0) {
            m1 = u_test(cu1, ref.pb_u1x, ref.nu1);
            sensor_kind = m1 >= 0 ? 2 : 0;
          }
        } else {
          m1 = u_test(cu1, ref.pb_u1x, ref.nu1);
          sensor_kind = m1 >= 0 ? 2 : 0;
          if (m1 < 0) {
            m1 = u_test(cu, ref.p_ux, ref.nu);
            sensor_kind = m1 >= 0 ? 1 : 0;
          }
        }

        // detector 1
        bool h1_alt;
        const int* ucw = sensor_kind == 1
                             ? cu.data() + static_cast<std::size_t>(m1) * static_cast<std::size_t>(n)
                             : nullptr;
        if (config.mode == DetectionMode::coherent) {
          bool ok = false;
          if (sensor_kind == 1) {
            count_pair(ucw, ref.nu, y1s, ref.ny1);
            ok = typical2(joint_counts, ref.p_uy1, config.mu / 4.0);
          }
          h1_alt = !ok;
        } else if (!third_codebook) {
          bool alt_typical = false;
          if (sensor_kind == 1) {
            count_pair(ucw, ref.nu, y1s, ref.ny1);
            alt_typical = typical2(joint_counts, ref.pb_uy1, config.mu / 4.0);
          }
          h1_alt = alt_typical;
        } else {
          bool alt_typical = false;
          if (sensor_kind == 2) {
            const int* u1cw =
                cu1.data() + static_cast<std::size_t>(m1) * static_cast<std::size_t>(n);
            count_pair(u1cw, ref.nu1, y1s, ref.ny1);
            alt_typical = typical2(joint_counts, ref.pb_u1y1, config.mu / 4.0);
          }
          h1_alt = alt_typical;
        }

        // detector 1 -> detector 2 message
        long long m2 = -1;
        if (sensor_kind == 1 && !h1_alt) {
          const auto& vb = v_codebook(m1);
          cands.clear();
          for (long long c = 0; c < m2_count; ++c) {
            const int* vcw = vb.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(n);
            joint_counts.assign(static_cast<std::size_t>(ref.ny1 * ref.nu * ref.nv), 0);
            for (int j = 0; j < n; ++j)
              ++joint_counts[static_cast<std::size_t>(
                  (y1s[static_cast<std::size_t>(j)] * ref.nu + ucw[j]) * ref.nv + vcw[j])];
            if (typical2(joint_counts, ref.p_uvy1, config.mu / 2.0)) cands.push_back(c);
          }
          if (!cands.empty())
            m2 = cands[static_cast<std::size_t>(rng.next_below(static_cast<int>(cands.size())))];
        }

        // detector 2
        bool h2_null = false;
        if (sensor_kind == 1 && m2 >= 0) {
          const auto& vb = v_codebook(m1);
          const int* vcw = vb.data() + static_cast<std::size_t>(m2) * static_cast<std::size_t>(n);
          joint_counts.assign(static_cast<std::size_t>(ref.ny2 * ref.nu * ref.nv), 0);
          for (int j = 0; j < n; ++j)
            ++joint_counts[static_cast<std::size_t>(
                (y2s[static_cast<std::size_t>(j)] * ref.nu + ucw[j]) * ref.nv + vcw[j])];
          h2_null = typical2(joint_counts, ref.p_uvy2, config.mu);
        }

        ++tally[static_cast<std::size_t>(law * 4 + (h1_alt ? 2 : 0) + (h2_null ? 1 : 0))];
      }
    }
    tallies[b] = tally;
  });

  long long counts[2][2][2] = {};
  for (const auto& tally : tallies)
    for (int law = 0; law < 2; ++law)
      for (int h1 = 0; h1 < 2; ++h1)
        for (int h2 = 0; h2 < 2; ++h2)
          counts[law][h1][h2] += tally[static_cast<std::size_t>(law * 4 + h1 * 2 + h2)];

  ZeroRateSchemeConfig shim;
  shim.n = config.n;
  shim.mu = config.mu;
  shim.mode = config.mode;
  double log_p_dummy[2][2][2] = {};
  return assemble(pair, shim, log_p_dummy, counts, trials);
}

}  // namespace hyptest
