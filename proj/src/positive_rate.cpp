#include "hyptest/positive_rate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hyptest/divmin.hpp"
#include "hyptest/parallel.hpp"
#include "hyptest/rng.hpp"

namespace hyptest {

namespace {

const char* kX = "X";
const char* kY1 = "Y1";
const char* kY2 = "Y2";
const char* kU = "U";
const char* kV = "V";
const char* kU1 = "U1";

std::vector<std::string> ax(std::initializer_list<const char*> names) {
  return std::vector<std::string>(names.begin(), names.end());
}

void require_dominated(const HypothesisPair& pair) {
  for (std::size_t i = 0; i < pair.p.cell_count(); ++i)
    if (pair.p[i] > kSupportEps && pair.p_bar[i] <= kSupportEps)
      throw precondition_error(
          "positive-rate exponents require the null law to be absolutely "
          "continuous w.r.t. the alternative law");
}

void validate_u_channel(const CondChannel& c, const JointPmf& base,
                        const char* output) {
  if (c.input_axes != ax({kX}) || c.output_axis != output)
    throw validation_error(std::string("aux: expected a channel X -> ") + output);
  if (c.input_sizes[0] != base.axis_size(kX))
    throw validation_error("aux: U-channel input alphabet mismatch");
}

void validate_v_channel(const CondChannel& c, const JointPmf& base, int u_size) {
  if (c.input_axes != ax({kU, kY1}) || c.output_axis != std::string(kV))
    throw validation_error("aux: expected a channel (U,Y1) -> V");
  if (c.input_sizes[0] != u_size || c.input_sizes[1] != base.axis_size(kY1))
    throw validation_error("aux: V-channel input alphabet mismatch");
}

JointPmf pmf_from_row(const char* name, std::vector<double> row) {
  int n = static_cast<int>(row.size());
  return JointPmf({name}, {n}, std::move(row));
}

double theta2_for_channels(const HypothesisPair& pair, const JointPmf& p5,
                           const JointPmf& pb5) {
  std::vector<MarginalConstraint> cs;
  cs.push_back({ax({kU, kX}), marginal(p5, ax({kX, kU}))});
  cs.push_back({ax({kU, kV, kY1}), marginal(p5, ax({kY1, kU, kV}))});
  cs.push_back({ax({kU, kV, kY2}), marginal(p5, ax({kY2, kU, kV}))});
  (void)pair;
  return i_project(pb5, cs).value;
}

// ---- channel search machinery ------------------------------------------

std::vector<double> softmax_rows(const std::vector<double>& logits, int cols) {
  std::vector<double> rows(logits.size());
  std::size_t n_rows = logits.size() / static_cast<std::size_t>(cols);
  for (std::size_t r = 0; r < n_rows; ++r) {
    const double* in = logits.data() + r * static_cast<std::size_t>(cols);
    double* out = rows.data() + r * static_cast<std::size_t>(cols);
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < cols; ++c) mx = std::max(mx, in[c]);
    double total = 0.0;
    for (int c = 0; c < cols; ++c) {
      out[c] = std::exp(in[c] - mx);
      total += out[c];
    }
    for (int c = 0; c < cols; ++c) out[c] /= total;
  }
  return rows;
}

std::vector<double> channel_to_logits(const CondChannel& c) {
  std::vector<double> logits(c.rows.size());
  for (std::size_t i = 0; i < c.rows.size(); ++i)
    logits[i] = std::log(std::max(c.rows[i], 1e-12));
  return logits;
}

// Maximizes a black-box objective over logit vectors by a simple
// adaptive-step random ascent; cheap objectives get polished well within
// the iteration budget and expensive ones still improve monotonically.
template <typename Objective>
double hill_climb(std::vector<double>& logits, const Objective& objective, int iters,
                  Rng& rng, long long& evals) {
  double best = objective(logits);
  ++evals;
  double sigma = 0.8;
  std::vector<double> trial(logits.size());
  for (int it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < logits.size(); ++i)
      trial[i] = logits[i] + sigma * rng.next_gaussian();
    double v = objective(trial);
    ++evals;
    if (v > best) {
      best = v;
      logits = trial;
      sigma = std::min(sigma * 1.25, 3.0);
    } else {
      sigma *= 0.85;
      if (sigma < 1e-3) sigma = 0.5;  // kick to escape flat spots
    }
  }
  return best;
}

struct FrontierEntry {
  double theta1 = 0.0;
  double theta2 = 0.0;
  std::size_t payload = 0;  // index into a payload store
};

// Pareto-maximal subset, ascending in theta1.
std::vector<FrontierEntry> pareto_filter(std::vector<FrontierEntry> pts) {
  std::sort(pts.begin(), pts.end(), [](const FrontierEntry& a, const FrontierEntry& b) {
    if (a.theta1 != b.theta1) return a.theta1 > b.theta1;
    return a.theta2 > b.theta2;
  });
  std::vector<FrontierEntry> keep;
  double best_t2 = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    if (p.theta2 > best_t2 + 1e-12) {
      keep.push_back(p);
      best_t2 = p.theta2;
    }
  }
  std::reverse(keep.begin(), keep.end());
  // drop duplicates that survived as distinct theta1 within noise
  std::vector<FrontierEntry> out;
  for (const auto& p : keep) {
    if (!out.empty() && std::fabs(out.back().theta1 - p.theta1) < 1e-9 &&
        std::fabs(out.back().theta2 - p.theta2) < 1e-9)
      continue;
    out.push_back(p);
  }
  return out;
}

}  // namespace

double channel_mutual_information(const JointPmf& px, const CondChannel& chan) {
  if (px.rank() != 1 || chan.input_axes.size() != 1 ||
      px.axis_sizes()[0] != chan.input_sizes[0])
    throw validation_error("channel rate: marginal/channel shapes do not match");
  const int nx = px.axis_sizes()[0];
  const int nu = chan.output_size;
  std::vector<double> mu(static_cast<std::size_t>(nu), 0.0);
  for (int x = 0; x < nx; ++x) {
    auto row = chan.row(static_cast<std::size_t>(x));
    for (int u = 0; u < nu; ++u) mu[static_cast<std::size_t>(u)] += px[static_cast<std::size_t>(x)] * row[u];
  }
  double info = 0.0;
  for (int x = 0; x < nx; ++x) {
    double w = px[static_cast<std::size_t>(x)];
    if (w <= kSupportEps) continue;
    auto row = chan.row(static_cast<std::size_t>(x));
    for (int u = 0; u < nu; ++u)
      if (row[u] > kSupportEps)
        info += w * row[u] * std::log(row[u] / mu[static_cast<std::size_t>(u)]);
  }
  return std::max(info, 0.0);
}

CondChannel clamp_channel_rate(const JointPmf& px, CondChannel chan, double max_rate) {
  double info = channel_mutual_information(px, chan);
  if (info <= max_rate) return chan;
  const int nx = px.axis_sizes()[0];
  const int nu = chan.output_size;
  std::vector<double> mu(static_cast<std::size_t>(nu), 0.0);
  for (int x = 0; x < nx; ++x) {
    auto row = chan.row(static_cast<std::size_t>(x));
    for (int u = 0; u < nu; ++u) mu[static_cast<std::size_t>(u)] += px[static_cast<std::size_t>(x)] * row[u];
  }
  // Mixing toward the induced output marginal keeps that marginal fixed,
  // so the rate decreases continuously to zero at t = 1.
  auto mixed = [&](double t) {
    std::vector<double> rows(chan.rows.size());
    for (int x = 0; x < nx; ++x)
      for (int u = 0; u < nu; ++u) {
        std::size_t i = static_cast<std::size_t>(x) * static_cast<std::size_t>(nu) +
                        static_cast<std::size_t>(u);
        rows[i] = (1.0 - t) * chan.rows[i] + t * mu[static_cast<std::size_t>(u)];
      }
    return rows;
  };
  auto rate_at = [&](double t) {
    std::vector<double> rows = mixed(t);
    double info_t = 0.0;
    for (int x = 0; x < nx; ++x) {
      double w = px[static_cast<std::size_t>(x)];
      if (w <= kSupportEps) continue;
      for (int u = 0; u < nu; ++u) {
        double c = rows[static_cast<std::size_t>(x) * static_cast<std::size_t>(nu) +
                        static_cast<std::size_t>(u)];
        if (c > kSupportEps && mu[static_cast<std::size_t>(u)] > kSupportEps)
          info_t += w * c * std::log(c / mu[static_cast<std::size_t>(u)]);
      }
    }
    return info_t;
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    if (rate_at(mid) > max_rate)
      lo = mid;
    else
      hi = mid;
  }
  return CondChannel(chan.input_axes, chan.input_sizes, chan.output_axis,
                     chan.output_size, mixed(hi));
}

namespace {

// I(V;Y1|U) and the corresponding boundary projection. p_y1u is the
// (Y1,U) marginal of the U-extended null law.
double v_rate(const JointPmf& p_y1u, const CondChannel& v_chan) {
  const int ny1 = p_y1u.axis_sizes()[0];
  const int nu = p_y1u.axis_sizes()[1];
  const int nv = v_chan.output_size;
  double info = 0.0;
  for (int u = 0; u < nu; ++u) {
    double pu = 0.0;
    for (int y = 0; y < ny1; ++y)
      pu += p_y1u[static_cast<std::size_t>(y * nu + u)];
    if (pu <= kSupportEps) continue;
    std::vector<double> mv(static_cast<std::size_t>(nv), 0.0);
    for (int y = 0; y < ny1; ++y) {
      double w = p_y1u[static_cast<std::size_t>(y * nu + u)] / pu;
      auto row = v_chan.row(static_cast<std::size_t>(u * ny1 + y));
      for (int v = 0; v < nv; ++v) mv[static_cast<std::size_t>(v)] += w * row[v];
    }
    for (int y = 0; y < ny1; ++y) {
      double w = p_y1u[static_cast<std::size_t>(y * nu + u)];
      if (w <= kSupportEps) continue;
      auto row = v_chan.row(static_cast<std::size_t>(u * ny1 + y));
      for (int v = 0; v < nv; ++v)
        if (row[v] > kSupportEps)
          info += w * row[v] * std::log(row[v] / mv[static_cast<std::size_t>(v)]);
    }
  }
  return std::max(info, 0.0);
}

CondChannel clamp_v_rate(const JointPmf& p_y1u, CondChannel v_chan, double max_rate) {
  if (v_rate(p_y1u, v_chan) <= max_rate) return v_chan;
  const int ny1 = p_y1u.axis_sizes()[0];
  const int nu = p_y1u.axis_sizes()[1];
  const int nv = v_chan.output_size;
  // Conditional output marginal per u; mixing toward it leaves it fixed.
  std::vector<double> mv(static_cast<std::size_t>(nu * nv), 0.0);
  for (int u = 0; u < nu; ++u) {
    double pu = 0.0;
    for (int y = 0; y < ny1; ++y) pu += p_y1u[static_cast<std::size_t>(y * nu + u)];
    if (pu <= kSupportEps) {
      for (int v = 0; v < nv; ++v)
        mv[static_cast<std::size_t>(u * nv + v)] = 1.0 / nv;
      continue;
    }
    for (int y = 0; y < ny1; ++y) {
      double w = p_y1u[static_cast<std::size_t>(y * nu + u)] / pu;
      auto row = v_chan.row(static_cast<std::size_t>(u * ny1 + y));
      for (int v = 0; v < nv; ++v)
        mv[static_cast<std::size_t>(u * nv + v)] += w * row[v];
    }
  }
  auto mixed = [&](double t) {
    std::vector<double> rows(v_chan.rows.size());
    for (int u = 0; u < nu; ++u)
      for (int y = 0; y < ny1; ++y)
        for (int v = 0; v < nv; ++v) {
          std::size_t i = static_cast<std::size_t>((u * ny1 + y) * nv + v);
          rows[i] = (1.0 - t) * v_chan.rows[i] + t * mv[static_cast<std::size_t>(u * nv + v)];
        }
    return rows;
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    CondChannel cand(v_chan.input_axes, v_chan.input_sizes, v_chan.output_axis,
                     v_chan.output_size, mixed(mid));
    if (v_rate(p_y1u, cand) > max_rate)
      lo = mid;
    else
      hi = mid;
  }
  return CondChannel(v_chan.input_axes, v_chan.input_sizes, v_chan.output_axis,
                     v_chan.output_size, mixed(hi));
}

}  // namespace

HighRateResult high_rate_region(const HypothesisPair& pair, DetectionMode mode,
                                bool cooperative) {
  auto kl_named = [](const JointPmf& a, const JointPmf& b, const char* term) {
    try {
      return kl_divergence(a, b);
    } catch (const divergence_infinite_error& e) {
      throw precondition_error(std::string("high-rate corner ") + term +
                               " is infinite: " + e.what());
    }
  };

  JointPmf p_xy1 = marginal(pair.p, ax({kX, kY1}));
  JointPmf pb_xy1 = marginal(pair.p_bar, ax({kX, kY1}));
  JointPmf p_xy2 = marginal(pair.p, ax({kX, kY2}));
  JointPmf pb_xy2 = marginal(pair.p_bar, ax({kX, kY2}));

  HighRateResult out;
  double theta1 = mode == DetectionMode::coherent
                      ? kl_named(p_xy1, pb_xy1, "D(P_XY1||P_XY1')")
                      : kl_named(pb_xy1, p_xy1, "D(P_XY1'||P_XY1)");
  out.theta2_cooperative = kl_named(pair.p, pair.p_bar, "D(P||P')");
  out.theta2_no_cooperation = kl_named(p_xy2, pb_xy2, "D(P_XY2||P_XY2')");

  // E_P[ D(P_{Y1|XY2} || conditional under the alternative) ], summed
  // directly so the chain-rule identity with the two corners is a real
  // cross-check rather than a tautology.
  double benefit = 0.0;
  {
    const auto& p = pair.p;
    std::vector<int> idx(3);
    for (std::size_t flat = 0; flat < p.cell_count(); ++flat) {
      double w = p[flat];
      if (w <= kSupportEps) continue;
      p.decode(flat, idx);
      std::size_t xy2 = static_cast<std::size_t>(idx[0]) *
                            static_cast<std::size_t>(p.axis_sizes()[2]) +
                        static_cast<std::size_t>(idx[2]);
      double cond_p = w / p_xy2[xy2];
      double cond_pb = pair.p_bar[flat] / pb_xy2[xy2];
      if (cond_pb <= kSupportEps)
        throw precondition_error(
            "high-rate benefit term is infinite: alternative conditional "
            "P_{Y1|XY2} vanishes on the null support");
      benefit += w * std::log(cond_p / cond_pb);
    }
  }
  out.benefit = std::max(benefit, 0.0);

  out.region.points.push_back(
      {theta1, cooperative ? out.theta2_cooperative : out.theta2_no_cooperation});
  out.region.is_rectangle = true;
  out.region.mode = mode;
  out.region.w1 = 2;
  out.region.w2 = cooperative ? 2 : 0;

  double hx = entropy(pair.p, ax({kX}));
  double hx_bar = entropy(pair.p_bar, ax({kX}));
  out.sufficient_rates.r1 =
      mode == DetectionMode::coherent ? hx : std::max(hx, hx_bar);
  out.sufficient_rates.r2 = entropy(pair.p, ax({kY1}), ax({kX}));
  return out;
}

namespace {

void require_testing_against_independence(const HypothesisPair& pair) {
  JointPmf p_y1 = marginal(pair.p, ax({kY1}));
  JointPmf p_y2 = marginal(pair.p, ax({kY2}));
  JointPmf p_y1y2 = marginal(pair.p, ax({kY1, kY2}));
  if (linf_distance(p_y1y2, tensor_product(p_y1, p_y2)) > 1e-9)
    throw precondition_error(
        "testing-against-independence region requires Y1 and Y2 independent "
        "under the null law");
  JointPmf p_x = marginal(pair.p, ax({kX}));
  JointPmf prod = tensor_product(tensor_product(p_x, p_y1), p_y2);
  if (linf_distance(pair.p_bar, prod) > 1e-9)
    throw precondition_error(
        "testing-against-independence region requires the alternative law to "
        "be the product of the null marginals");
}

struct TiTaskResult {
  double value = -std::numeric_limits<double>::infinity();
  double theta1 = 0.0;
  double theta2 = 0.0;
  std::vector<double> logits;
};

}  // namespace

TiRegion region_test_against_independence(const HypothesisPair& pair, double r1,
                                          const SearchConfig& search,
                                          bool cooperative) {
  if (r1 < 0.0) throw validation_error("rate r1 must be nonnegative");
  require_testing_against_independence(pair);

  const int nx = pair.p.axis_sizes()[0];
  const int nu = search.u_size > 0 ? search.u_size : nx + 1;
  JointPmf px = marginal(pair.p, ax({kX}));

  auto eval_logits = [&](const std::vector<double>& logits, double lambda,
                         double* th1_out, double* th2_out) {
    CondChannel chan(ax({kX}), {nx}, kU, nu, softmax_rows(logits, nu));
    chan = clamp_channel_rate(px, std::move(chan), r1);
    JointPmf p4 = attach_channel(pair.p, chan);
    double iuy1 = mutual_information(p4, ax({kU}), ax({kY1}));
    double iuy2 = mutual_information(p4, ax({kU}), ax({kY2}));
    double th1 = iuy1;
    double th2 = cooperative ? iuy1 + iuy2 : iuy2;
    if (th1_out) *th1_out = th1;
    if (th2_out) *th2_out = th2;
    return lambda * th1 + (1.0 - lambda) * th2;
  };

  const int n_lambda = std::max(search.lambda_points, 1);
  const int n_restarts = std::max(search.restarts, 1);
  std::vector<TiTaskResult> tasks(static_cast<std::size_t>(n_lambda * n_restarts));
  std::vector<long long> task_evals(tasks.size(), 0);

  parallel_for(tasks.size(), [&](std::size_t task) {
    int li = static_cast<int>(task) / n_restarts;
    int rs = static_cast<int>(task) % n_restarts;
    double lambda = n_lambda == 1 ? 0.0
                                  : static_cast<double>(li) / (n_lambda - 1);
    Rng rng = Rng::stream(search.seed, task * 2654435761ULL + 17);
    std::vector<double> logits(static_cast<std::size_t>(nx) * static_cast<std::size_t>(nu));
    if (rs == 0) {
      // identity-style quantizer: u = x
      for (int x = 0; x < nx; ++x)
        for (int u = 0; u < nu; ++u)
          logits[static_cast<std::size_t>(x * nu + u)] = (u == x) ? 6.0 : 0.0;
    } else if (rs == 1) {
      std::fill(logits.begin(), logits.end(), 0.0);  // useless channel
    } else {
      for (auto& l : logits) l = 1.5 * rng.next_gaussian();
    }
    auto objective = [&](const std::vector<double>& l) {
      return eval_logits(l, lambda, nullptr, nullptr);
    };
    TiTaskResult res;
    res.value = hill_climb(logits, objective, search.iters, rng, task_evals[task]);
    res.logits = std::move(logits);
    eval_logits(res.logits, lambda, &res.theta1, &res.theta2);
    tasks[task] = std::move(res);
  });

  // Deterministic per-lambda winners, then the Pareto frontier.
  std::vector<FrontierEntry> entries;
  std::vector<std::vector<double>> winners;
  for (int li = 0; li < n_lambda; ++li) {
    int best_rs = 0;
    for (int rs = 1; rs < n_restarts; ++rs) {
      std::size_t t = static_cast<std::size_t>(li * n_restarts + rs);
      if (tasks[t].value > tasks[static_cast<std::size_t>(li * n_restarts + best_rs)].value)
        best_rs = rs;
    }
    const auto& w = tasks[static_cast<std::size_t>(li * n_restarts + best_rs)];
    entries.push_back({w.theta1, w.theta2, winners.size()});
    winners.push_back(w.logits);
  }

  TiRegion out;
  for (const auto& e : pareto_filter(std::move(entries))) {
    out.region.points.push_back({e.theta1, e.theta2});
    CondChannel chan(ax({kX}), {nx}, kU, nu, softmax_rows(winners[e.payload], nu));
    out.channels.push_back(clamp_channel_rate(px, std::move(chan), r1));
  }
  out.region.is_rectangle = out.region.points.size() == 1;
  out.region.mode = DetectionMode::coherent;
  out.region.w1 = 2;
  out.region.w2 = cooperative ? 2 : 0;
  for (long long e : task_evals) out.evaluations += e;
  return out;
}

double ti_max_theta2(const HypothesisPair& pair, double r1, const SearchConfig& search,
                     bool cooperative) {
  SearchConfig end = search;
  end.lambda_points = 1;  // the lambda = 0 scalarization is theta2 itself
  end.seed = mix64(search.seed ^ 0xfeedULL);
  TiRegion region = region_test_against_independence(pair, r1, end, cooperative);
  double best = 0.0;
  for (const auto& pt : region.region.points) best = std::max(best, pt[1]);
  return best;
}

AuxExponents exponents_for_aux_coherent(const HypothesisPair& pair,
                                        const AuxChannels& aux) {
  require_dominated(pair);
  validate_u_channel(aux.u_given_x, pair.p, kU);
  validate_v_channel(aux.v_given_uy1, pair.p, aux.u_given_x.output_size);

  JointPmf p4 = attach_channel(pair.p, aux.u_given_x);
  JointPmf pb4 = attach_channel(pair.p_bar, aux.u_given_x);
  JointPmf p5 = attach_channel(p4, aux.v_given_uy1);
  JointPmf pb5 = attach_channel(pb4, aux.v_given_uy1);

  std::vector<MarginalConstraint> cs1;
  cs1.push_back({ax({kU, kX}), marginal(p4, ax({kX, kU}))});
  cs1.push_back({ax({kU, kY1}), marginal(p4, ax({kY1, kU}))});
  JointPmf target1 = marginal(pb4, ax({kX, kY1, kU}));

  AuxExponents out;
  out.theta1 = i_project(target1, cs1).value;
  out.theta2 = theta2_for_channels(pair, p5, pb5);
  out.rate_u = mutual_information(p4, ax({kU}), ax({kX}));
  out.rate_v = mutual_information(p5, ax({kV}), ax({kY1}), ax({kU}));
  return out;
}

AuxExponents exponents_for_aux_concurrent(const HypothesisPair& pair,
                                          const AuxChannels& aux,
                                          bool equal_marginals) {
  require_dominated(pair);
  if (equal_marginals != pair.equal_x_marginals())
    throw precondition_error(
        equal_marginals
            ? "equal-marginals mode requires identical X-marginals under both laws"
            : "distinct-marginals mode requires the X-marginals to differ");
  validate_u_channel(aux.u_given_x, pair.p, kU);
  validate_v_channel(aux.v_given_uy1, pair.p, aux.u_given_x.output_size);

  JointPmf p4 = attach_channel(pair.p, aux.u_given_x);
  JointPmf pb4 = attach_channel(pair.p_bar, aux.u_given_x);
  JointPmf p5 = attach_channel(p4, aux.v_given_uy1);
  JointPmf pb5 = attach_channel(pb4, aux.v_given_uy1);

  AuxExponents out;
  if (equal_marginals) {
    std::vector<MarginalConstraint> cs1;
    cs1.push_back({ax({kU, kX}), marginal(pb4, ax({kX, kU}))});
    cs1.push_back({ax({kU, kY1}), marginal(pb4, ax({kY1, kU}))});
    out.theta1 = i_project(marginal(p4, ax({kX, kY1, kU})), cs1).value;
  } else {
    if (!aux.u1_given_x.has_value())
      throw validation_error(
          "concurrent detection with distinct X-marginals needs the U1 channel");
    validate_u_channel(*aux.u1_given_x, pair.p, kU1);
    JointPmf p3 = marginal(pair.p, ax({kX, kY1}));
    JointPmf pb3 = marginal(pair.p_bar, ax({kX, kY1}));
    JointPmf p4u1 = attach_channel(p3, *aux.u1_given_x);
    JointPmf pb4u1 = attach_channel(pb3, *aux.u1_given_x);
    std::vector<MarginalConstraint> cs1;
    cs1.push_back({ax({kU1, kX}), marginal(pb4u1, ax({kX, kU1}))});
    cs1.push_back({ax({kU1, kY1}), marginal(pb4u1, ax({kY1, kU1}))});
    out.theta1 = i_project(p4u1, cs1).value;
    out.rate_u1 = mutual_information(pb4u1, ax({kU1}), ax({kX}));
  }
  out.theta2 = theta2_for_channels(pair, p5, pb5);
  out.rate_u = mutual_information(p4, ax({kU}), ax({kX}));
  out.rate_v = mutual_information(p5, ax({kV}), ax({kY1}), ax({kU}));
  return out;
}

namespace {

struct PairSearchTask {
  double value = -std::numeric_limits<double>::infinity();
  double theta1 = 0.0;
  double theta2 = 0.0;
  AuxChannels channels{CondChannel({"X"}, {1}, "U", 1, {1.0}),
                       CondChannel({"U", "Y1"}, {1, 1}, "V", 1, {1.0}),
                       std::nullopt};
};

}  // namespace

AchievableRegion region_achievable(const HypothesisPair& pair, const RatePair& rates,
                                   DetectionMode mode, const SearchConfig& search) {
  if (rates.r1 < 0.0 || rates.r2 < 0.0)
    throw validation_error("rates must be nonnegative");
  require_dominated(pair);

  const int nx = pair.p.axis_sizes()[0];
  const int ny1 = pair.p.axis_sizes()[1];
  const int nu = search.u_size > 0 ? search.u_size : nx + 1;
  const int nv = search.v_size > 0 ? search.v_size : nu * ny1 + 1;
  const bool equal = pair.equal_x_marginals();
  const bool rectangle = mode == DetectionMode::concurrent && !equal;
  JointPmf px = marginal(pair.p, ax({kX}));
  JointPmf px_bar = marginal(pair.p_bar, ax({kX}));

  const std::size_t n_u_logits = static_cast<std::size_t>(nx) * static_cast<std::size_t>(nu);
  const std::size_t n_v_logits =
      static_cast<std::size_t>(nu) * static_cast<std::size_t>(ny1) * static_cast<std::size_t>(nv);

  // Decode a flat logit vector into rate-feasible channels.
  auto decode_uv = [&](const std::vector<double>& logits) {
    CondChannel u(ax({kX}), {nx}, kU, nu,
                  softmax_rows({logits.begin(), logits.begin() + static_cast<long>(n_u_logits)}, nu));
    u = clamp_channel_rate(px, std::move(u), rates.r1);
    JointPmf p4 = attach_channel(pair.p, u);
    CondChannel v(ax({kU, kY1}), {nu, ny1}, kV, nv,
                  softmax_rows({logits.begin() + static_cast<long>(n_u_logits), logits.end()}, nv));
    v = clamp_v_rate(marginal(p4, ax({kY1, kU})), std::move(v), rates.r2);
    return AuxChannels{std::move(u), std::move(v), std::nullopt};
  };

  auto exponents_of = [&](const AuxChannels& channels) {
    return mode == DetectionMode::coherent
               ? exponents_for_aux_coherent(pair, channels)
               : exponents_for_aux_concurrent(pair, channels, equal);
  };

  auto seed_logits = [&](int rs, Rng& rng) {
    std::vector<double> logits(n_u_logits + n_v_logits, 0.0);
    if (rs == 0) {
      // identity quantizers, later clamped to the rate boundary
      for (int x = 0; x < nx; ++x)
        for (int u = 0; u < nu; ++u)
          logits[static_cast<std::size_t>(x * nu + u)] = (u == x) ? 7.0 : 0.0;
      for (int u = 0; u < nu; ++u)
        for (int y = 0; y < ny1; ++y)
          for (int v = 0; v < nv; ++v)
            logits[n_u_logits + static_cast<std::size_t>((u * ny1 + y) * nv + v)] =
                (v == y) ? 7.0 : 0.0;
    } else if (rs == 1) {
      // useless channels: the zero-information operating point
    } else if (rs - 2 < static_cast<int>(search.seed_channels.size())) {
      const auto& seed = search.seed_channels[static_cast<std::size_t>(rs - 2)];
      if (seed.u_given_x.output_size == nu && seed.v_given_uy1.output_size == nv) {
        auto ul = channel_to_logits(seed.u_given_x);
        auto vl = channel_to_logits(seed.v_given_uy1);
        std::copy(ul.begin(), ul.end(), logits.begin());
        std::copy(vl.begin(), vl.end(), logits.begin() + static_cast<long>(n_u_logits));
      }
    } else {
      for (auto& l : logits) l = 1.5 * rng.next_gaussian();
    }
    return logits;
  };

  AchievableRegion out;
  std::vector<FrontierEntry> entries;
  std::vector<AuxChannels> payloads;

  if (!rectangle) {
    const int n_lambda = std::max(search.lambda_points, 1);
    const int n_restarts = std::max(search.restarts, 2);
    std::vector<PairSearchTask> tasks(static_cast<std::size_t>(n_lambda * n_restarts));
    std::vector<long long> task_evals(tasks.size(), 0);

    parallel_for(tasks.size(), [&](std::size_t task) {
      int li = static_cast<int>(task) / n_restarts;
      int rs = static_cast<int>(task) % n_restarts;
      double lambda = n_lambda == 1 ? 0.5
                                    : static_cast<double>(li) / (n_lambda - 1);
      Rng rng = Rng::stream(search.seed, task * 0x9e3779b9ULL + 101);
      std::vector<double> logits = seed_logits(rs, rng);
      auto objective = [&](const std::vector<double>& l) {
        AuxChannels ch = decode_uv(l);
        AuxExponents e = exponents_of(ch);
        return lambda * e.theta1 + (1.0 - lambda) * e.theta2;
      };
      PairSearchTask res;
      res.value = hill_climb(logits, objective, search.iters, rng, task_evals[task]);
      res.channels = decode_uv(logits);
      AuxExponents e = exponents_of(res.channels);
      res.theta1 = e.theta1;
      res.theta2 = e.theta2;
      tasks[task] = std::move(res);
    });

    for (int li = 0; li < n_lambda; ++li) {
      int best_rs = 0;
      for (int rs = 1; rs < n_restarts; ++rs)
        if (tasks[static_cast<std::size_t>(li * n_restarts + rs)].value >
            tasks[static_cast<std::size_t>(li * n_restarts + best_rs)].value)
          best_rs = rs;
      auto& w = tasks[static_cast<std::size_t>(li * n_restarts + best_rs)];
      entries.push_back({w.theta1, w.theta2, payloads.size()});
      payloads.push_back(std::move(w.channels));
    }
    for (long long e : task_evals) out.evaluations += e;
  } else {
    // Distinct-marginal concurrent detection: theta1 depends only on U1
    // and theta2 only on (U,V); optimize the two independently.
    const int n_restarts = std::max(search.restarts, 2);
    std::vector<PairSearchTask> t2_tasks(static_cast<std::size_t>(n_restarts));
    std::vector<double> t1_vals(static_cast<std::size_t>(n_restarts),
                                -std::numeric_limits<double>::infinity());
    std::vector<std::vector<double>> t1_logits(static_cast<std::size_t>(n_restarts));
    std::vector<long long> task_evals(static_cast<std::size_t>(2 * n_restarts), 0);

    auto theta1_of_u1 = [&](const CondChannel& u1) {
      JointPmf p4u1 = attach_channel(marginal(pair.p, ax({kX, kY1})), u1);
      JointPmf pb4u1 = attach_channel(marginal(pair.p_bar, ax({kX, kY1})), u1);
      std::vector<MarginalConstraint> cs1;
      cs1.push_back({ax({kU1, kX}), marginal(pb4u1, ax({kX, kU1}))});
      cs1.push_back({ax({kU1, kY1}), marginal(pb4u1, ax({kY1, kU1}))});
      return i_project(p4u1, cs1).value;
    };

    parallel_for(static_cast<std::size_t>(2 * n_restarts), [&](std::size_t task) {
      int rs = static_cast<int>(task) % n_restarts;
      bool is_theta1 = task < static_cast<std::size_t>(n_restarts);
      Rng rng = Rng::stream(search.seed, task * 0x9e3779b9ULL + 7777);
      if (is_theta1) {
        std::vector<double> logits(n_u_logits, 0.0);
        if (rs == 0) {
          for (int x = 0; x < nx; ++x)
            for (int u = 0; u < nu; ++u)
              logits[static_cast<std::size_t>(x * nu + u)] = (u == x) ? 7.0 : 0.0;
        } else if (rs >= 2) {
          for (auto& l : logits) l = 1.5 * rng.next_gaussian();
        }
        auto objective = [&](const std::vector<double>& l) {
          CondChannel u1(ax({kX}), {nx}, kU1, nu, softmax_rows(l, nu));
          u1 = clamp_channel_rate(px_bar, std::move(u1), rates.r1);
          return theta1_of_u1(u1);
        };
        t1_vals[static_cast<std::size_t>(rs)] =
            hill_climb(logits, objective, search.iters, rng, task_evals[task]);
        t1_logits[static_cast<std::size_t>(rs)] = std::move(logits);
      } else {
        std::vector<double> logits = seed_logits(rs, rng);
        auto objective = [&](const std::vector<double>& l) {
          AuxChannels ch = decode_uv(l);
          AuxExponents e = exponents_for_aux_coherent(pair, ch);  // theta2 shared
          return e.theta2;
        };
        PairSearchTask res;
        res.value = hill_climb(logits, objective, search.iters, rng, task_evals[task]);
        res.channels = decode_uv(logits);
        t2_tasks[static_cast<std::size_t>(rs)] = std::move(res);
      }
    });

    int best1 = 0, best2 = 0;
    for (int rs = 1; rs < n_restarts; ++rs) {
      if (t1_vals[static_cast<std::size_t>(rs)] > t1_vals[static_cast<std::size_t>(best1)])
        best1 = rs;
      if (t2_tasks[static_cast<std::size_t>(rs)].value >
          t2_tasks[static_cast<std::size_t>(best2)].value)
        best2 = rs;
    }
    CondChannel u1(ax({kX}), {nx}, kU1, nu,
                   softmax_rows(t1_logits[static_cast<std::size_t>(best1)], nu));
    u1 = clamp_channel_rate(px_bar, std::move(u1), rates.r1);
    AuxChannels channels = t2_tasks[static_cast<std::size_t>(best2)].channels;
    channels.u1_given_x = u1;
    AuxExponents e = exponents_for_aux_concurrent(pair, channels, false);
    entries.push_back({e.theta1, e.theta2, payloads.size()});
    payloads.push_back(std::move(channels));
    for (long long ev : task_evals) out.evaluations += ev;
  }

  for (const auto& e : pareto_filter(std::move(entries))) {
    out.region.points.push_back({e.theta1, e.theta2});
    out.channels.push_back(payloads[e.payload]);
  }
  out.region.is_rectangle = out.region.points.size() == 1;
  out.region.mode = mode;
  out.region.w1 = 2;
  out.region.w2 = 2;
  return out;
}

}  // namespace hyptest
