#include "hyptest/zero_rate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hyptest/parallel.hpp"

namespace hyptest {

namespace {

const char* kAxisX = "X";
const char* kAxisY1 = "Y1";
const char* kAxisY2 = "Y2";

std::vector<std::string> ax(std::initializer_list<const char*> names) {
  return std::vector<std::string>(names.begin(), names.end());
}

JointPmf x_marginal_pmf(const JointPmf& joint, const std::vector<double>& pi) {
  return JointPmf({joint.axis_names()[0]}, {joint.axis_sizes()[0]},
                  std::vector<double>(pi));
}

void require_distinct_x_marginals(const HypothesisPair& pair) {
  if (pair.equal_x_marginals())
    throw precondition_error(
        "mode requires distinct X-marginals (P_X != P_X under the alternative); "
        "use the equal-marginals region instead");
}

void require_equal_x_marginals(const HypothesisPair& pair) {
  if (!pair.equal_x_marginals())
    throw precondition_error(
        "mode requires identical X-marginals under both hypotheses; "
        "use the W1>=3 or W1=2 concurrent regions instead");
}

// Detector 2's cooperative corner: the same objective in every mode.
double theta2_cooperative(const HypothesisPair& pair) {
  std::vector<MarginalConstraint> cs;
  cs.push_back({ax({kAxisX}), marginal(pair.p, ax({kAxisX}))});
  cs.push_back({ax({kAxisY1}), marginal(pair.p, ax({kAxisY1}))});
  cs.push_back({ax({kAxisY2}), marginal(pair.p, ax({kAxisY2}))});
  return i_project(pair.p_bar, cs).value;
}

double theta2_no_cooperation(const HypothesisPair& pair) {
  JointPmf target = marginal(pair.p_bar, ax({kAxisX, kAxisY2}));
  std::vector<MarginalConstraint> cs;
  cs.push_back({ax({kAxisX}), marginal(pair.p, ax({kAxisX}))});
  cs.push_back({ax({kAxisY2}), marginal(pair.p, ax({kAxisY2}))});
  return i_project(target, cs).value;
}

ExponentRegion corner_region(double t1, double t2, DetectionMode mode, int w1, int w2) {
  ExponentRegion region;
  region.points.push_back({t1, t2});
  region.is_rectangle = true;
  region.mode = mode;
  region.w1 = w1;
  region.w2 = w2;
  return region;
}

}  // namespace

std::string to_string(DetectionMode mode) {
  return mode == DetectionMode::coherent ? "coherent" : "concurrent";
}

std::string to_string(Mapping mapping) {
  return mapping == Mapping::same ? "same" : "different";
}

double e1_exponent(const HypothesisPair& pair, const std::vector<double>& pi) {
  JointPmf target = marginal(pair.p, ax({kAxisX, kAxisY1}));
  std::vector<MarginalConstraint> cs;
  cs.push_back({ax({kAxisX}), x_marginal_pmf(pair.p, pi)});
  cs.push_back({ax({kAxisY1}), marginal(pair.p_bar, ax({kAxisY1}))});
  return i_project(target, cs).value;
}

double e2_exponent(const HypothesisPair& pair, const std::vector<double>& pi) {
  std::vector<MarginalConstraint> cs;
  cs.push_back({ax({kAxisX}), x_marginal_pmf(pair.p, pi)});
  cs.push_back({ax({kAxisY1}), marginal(pair.p, ax({kAxisY1}))});
  cs.push_back({ax({kAxisY2}), marginal(pair.p, ax({kAxisY2}))});
  return i_project(pair.p_bar, cs).value;
}

bool in_gamma_alt(double e1, double e2, double r) { return e1 + r >= e2; }

bool in_gamma_alt(const HypothesisPair& pair, const std::vector<double>& pi, double r) {
  return in_gamma_alt(e1_exponent(pair, pi), e2_exponent(pair, pi), r);
}

std::vector<std::vector<double>> simplex_grid(
    int dim, double step, const std::vector<std::vector<double>>& extra) {
  if (dim < 1) throw validation_error("simplex grid: dimension must be positive");
  if (!(step > 0.0) || step > 0.1)
    throw validation_error("simplex grid: step must lie in (0, 0.1]");
  int m = static_cast<int>(std::lround(1.0 / step));
  std::vector<std::vector<double>> grid;
  std::vector<int> counts(static_cast<std::size_t>(dim), 0);
  // Enumerate compositions of m into dim parts, lexicographically.
  auto emit = [&] {
    std::vector<double> pi(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i)
      pi[static_cast<std::size_t>(i)] =
          static_cast<double>(counts[static_cast<std::size_t>(i)]) / m;
    grid.push_back(std::move(pi));
  };
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == dim - 1) {
      counts[static_cast<std::size_t>(pos)] = left;
      emit();
      return;
    }
    for (int c = 0; c <= left; ++c) {
      counts[static_cast<std::size_t>(pos)] = c;
      rec(pos + 1, left - c);
    }
  };
  rec(0, m);

  for (const auto& pt : extra) {
    if (static_cast<int>(pt.size()) != dim)
      throw validation_error("simplex grid: extra point has the wrong dimension");
    bool dup = false;
    for (const auto& g : grid) {
      double d = 0.0;
      for (int i = 0; i < dim; ++i)
        d = std::max(d, std::fabs(g[static_cast<std::size_t>(i)] -
                                  pt[static_cast<std::size_t>(i)]));
      if (d < 1e-12) {
        dup = true;
        break;
      }
    }
    if (!dup) grid.push_back(pt);
  }
  return grid;
}

ExponentRegion region_coherent(const HypothesisPair& pair) {
  pair.require_zero_rate_support();
  JointPmf target1 = marginal(pair.p_bar, ax({kAxisX, kAxisY1}));
  std::vector<MarginalConstraint> cs1;
  cs1.push_back({ax({kAxisX}), marginal(pair.p, ax({kAxisX}))});
  cs1.push_back({ax({kAxisY1}), marginal(pair.p, ax({kAxisY1}))});
  double t1 = i_project(target1, cs1).value;
  return corner_region(t1, theta2_cooperative(pair), DetectionMode::coherent, 2, 2);
}

ExponentRegion region_concurrent_equal_marginals(const HypothesisPair& pair) {
  pair.require_zero_rate_support();
  require_equal_x_marginals(pair);
  JointPmf target1 = marginal(pair.p, ax({kAxisX, kAxisY1}));
  std::vector<MarginalConstraint> cs1;
  cs1.push_back({ax({kAxisX}), marginal(pair.p, ax({kAxisX}))});
  cs1.push_back({ax({kAxisY1}), marginal(pair.p_bar, ax({kAxisY1}))});
  double t1 = i_project(target1, cs1).value;
  return corner_region(t1, theta2_cooperative(pair), DetectionMode::concurrent, 2, 2);
}

ExponentRegion region_concurrent_w1ge3(const HypothesisPair& pair) {
  pair.require_zero_rate_support();
  require_distinct_x_marginals(pair);
  JointPmf target1 = marginal(pair.p, ax({kAxisX, kAxisY1}));
  std::vector<MarginalConstraint> cs1;
  cs1.push_back({ax({kAxisX}), marginal(pair.p_bar, ax({kAxisX}))});
  cs1.push_back({ax({kAxisY1}), marginal(pair.p_bar, ax({kAxisY1}))});
  double t1 = i_project(target1, cs1).value;
  return corner_region(t1, theta2_cooperative(pair), DetectionMode::concurrent, 3, 2);
}

PartitionSweepResult region_concurrent_w1eq2(const HypothesisPair& pair,
                                             double px_grid_step,
                                             const std::vector<double>& r_grid) {
  pair.require_zero_rate_support();
  require_distinct_x_marginals(pair);
  if (r_grid.empty())
    throw validation_error("partition sweep: the threshold grid must be non-empty");

  const auto px = marginal(pair.p, ax({kAxisX})).probs();
  const auto px_bar = marginal(pair.p_bar, ax({kAxisX})).probs();
  auto grid = simplex_grid(pair.p.axis_sizes()[0], px_grid_step, {px, px_bar});

  // Locate the two distinguished marginals on the grid.
  auto find_point = [&](const std::vector<double>& pt) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double d = 0.0;
      for (std::size_t k = 0; k < pt.size(); ++k)
        d = std::max(d, std::fabs(grid[i][k] - pt[k]));
      if (d < 1e-12) return i;
    }
    throw validation_error("partition sweep: distinguished point missing from grid");
  };
  const std::size_t idx_p = find_point(px);
  const std::size_t idx_pbar = find_point(px_bar);

  std::vector<double> e1(grid.size()), e2(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    e1[i] = e1_exponent(pair, grid[i]);
    e2[i] = e2_exponent(pair, grid[i]);
  });

  PartitionSweepResult out;
  out.sweep.reserve(r_grid.size() + 1);
  for (double r : r_grid) {
    double t1 = e1[idx_pbar];
    double t2 = e2[idx_p];
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (i == idx_p || i == idx_pbar) continue;
      if (in_gamma_alt(e1[i], e2[i], r))
        t1 = std::min(t1, e1[i]);
      else
        t2 = std::min(t2, e2[i]);
    }
    out.sweep.push_back({r, Mapping::different, t1, t2});
  }
  // Single-message mapping: every non-typical marginal is answered with
  // the "reject" message, so only the two distinguished marginals remain
  // in either decision event.
  out.sweep.push_back({0.0, Mapping::same, std::min(e1[idx_p], e1[idx_pbar]),
                       std::min(e2[idx_p], e2[idx_pbar])});

  // Pareto frontier (maximal points), ascending in theta1.
  std::vector<std::array<double, 2>> pts;
  for (const auto& sp : out.sweep) pts.push_back({sp.theta1, sp.theta2});
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    if (a[0] != b[0]) return a[0] > b[0];
    return a[1] > b[1];
  });
  std::vector<std::array<double, 2>> frontier;
  double best_t2 = -std::numeric_limits<double>::infinity();
  for (const auto& pt : pts) {
    if (pt[1] > best_t2 + 1e-15) {
      frontier.push_back(pt);
      best_t2 = pt[1];
    }
  }
  std::reverse(frontier.begin(), frontier.end());

  out.region.points = std::move(frontier);
  out.region.is_rectangle = out.region.points.size() == 1;
  out.region.mode = DetectionMode::concurrent;
  out.region.w1 = 2;
  out.region.w2 = 2;
  return out;
}

ExponentRegion region_no_cooperation(const HypothesisPair& pair, DetectionMode mode) {
  pair.require_zero_rate_support();
  double t1 = 0.0;
  int w1 = 2;
  if (mode == DetectionMode::coherent) {
    t1 = region_coherent(pair).points[0][0];
  } else if (pair.equal_x_marginals()) {
    t1 = region_concurrent_equal_marginals(pair).points[0][0];
  } else {
    t1 = region_concurrent_w1ge3(pair).points[0][0];
    w1 = 3;
  }
  return corner_region(t1, theta2_no_cooperation(pair), mode, w1, 0);
}

double cooperation_benefit_zero_rate(const HypothesisPair& pair) {
  pair.require_zero_rate_support();
  return std::max(theta2_cooperative(pair) - theta2_no_cooperation(pair), 0.0);
}

}  // namespace hyptest
