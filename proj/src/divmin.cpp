#include "hyptest/divmin.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "hyptest/rng.hpp"

namespace hyptest {

namespace {

// Per-constraint view onto the ambient cell space: for every ambient cell
// the flat index of its projection onto the constraint axes, plus the
// constraint target aligned to the ambient axis order.
struct ConstraintView {
  std::vector<std::size_t> cell_to_row;  // ambient cell -> constraint cell
  std::vector<double> target;            // aligned target values
  std::size_t rows = 0;
};

ConstraintView make_view(const JointPmf& ambient, const MarginalConstraint& c) {
  ConstraintView view;
  if (c.axes.empty())
    throw validation_error("constraint: axis subset must be non-empty");
  if (c.axes.size() != static_cast<std::size_t>(c.target.rank()))
    throw validation_error("constraint: target rank must match the axis list");

  // Retained axes in ambient order, as marginal() produces them.
  std::vector<int> kept;
  for (int i = 0; i < ambient.rank(); ++i) {
    const auto& name = ambient.axis_names()[static_cast<std::size_t>(i)];
    if (std::find(c.axes.begin(), c.axes.end(), name) != c.axes.end())
      kept.push_back(i);
  }
  if (kept.size() != c.axes.size())
    throw validation_error("constraint: axes must be a subset of the ambient axes");

  std::vector<std::string> kept_names;
  for (int i : kept) kept_names.push_back(ambient.axis_names()[static_cast<std::size_t>(i)]);
  JointPmf aligned = reorder_axes(c.target, kept_names);
  for (std::size_t j = 0; j < kept.size(); ++j)
    if (aligned.axis_sizes()[j] !=
        ambient.axis_sizes()[static_cast<std::size_t>(kept[j])])
      throw validation_error("constraint: alphabet size mismatch on axis '" +
                             kept_names[j] + "'");

  view.rows = aligned.cell_count();
  view.target = aligned.probs();
  view.cell_to_row.resize(ambient.cell_count());
  std::vector<int> idx(static_cast<std::size_t>(ambient.rank()));
  for (std::size_t flat = 0; flat < ambient.cell_count(); ++flat) {
    ambient.decode(flat, idx);
    std::size_t row = 0;
    for (std::size_t j = 0; j < kept.size(); ++j) {
      row = row * static_cast<std::size_t>(
                      ambient.axis_sizes()[static_cast<std::size_t>(kept[j])]) +
            static_cast<std::size_t>(idx[static_cast<std::size_t>(kept[j])]);
    }
    view.cell_to_row[flat] = row;
  }
  return view;
}

void current_marginal(const std::vector<double>& q, const ConstraintView& v,
                      std::vector<double>& out) {
  out.assign(v.rows, 0.0);
  for (std::size_t i = 0; i < q.size(); ++i) out[v.cell_to_row[i]] += q[i];
}

double deviation(const std::vector<double>& marg, const ConstraintView& v) {
  double d = 0.0;
  for (std::size_t r = 0; r < v.rows; ++r)
    d = std::max(d, std::fabs(marg[r] - v.target[r]));
  return d;
}

// Constraints whose axis sets overlap must agree on the shared marginal,
// otherwise the feasible set is empty and the scaling cycle would
// oscillate instead of converging.
void check_pairwise_consistency(const JointPmf& ambient,
                                const std::vector<MarginalConstraint>& cs) {
  for (std::size_t i = 0; i < cs.size(); ++i)
    for (std::size_t j = i + 1; j < cs.size(); ++j) {
      std::vector<std::string> common;
      for (const auto& name : cs[i].axes)
        if (std::find(cs[j].axes.begin(), cs[j].axes.end(), name) != cs[j].axes.end())
          common.push_back(name);
      if (common.empty()) continue;
      (void)ambient;
      JointPmf mi = marginal(cs[i].target, common);
      JointPmf mj = reorder_axes(marginal(cs[j].target, common), mi.axis_names());
      if (linf_distance(mi, mj) > 1e-9) {
        std::ostringstream os;
        os << "constraints " << i << " and " << j
           << " disagree on their common marginal over {";
        for (std::size_t k = 0; k < common.size(); ++k)
          os << (k ? "," : "") << common[k];
        os << "}";
        throw validation_error(os.str());
      }
    }
}

double divergence_to_target(const std::vector<double>& q, const JointPmf& target) {
  double acc = 0.0, carry = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] <= kSupportEps) continue;
    double term = q[i] * std::log(q[i] / target[i]);
    double y = term - carry;
    double t = acc + y;
    carry = (t - acc) - y;
    acc = t;
  }
  return std::max(acc, 0.0);
}

JointPmf wrap_distribution(const JointPmf& like, std::vector<double> probs) {
  // Scaling updates keep the mass at one only up to round-off; snap it
  // back before handing the vector to the validating constructor.
  double total = 0.0;
  for (double v : probs) total += v;
  if (total > 0.0 && std::fabs(total - 1.0) > 1e-14)
    for (double& v : probs) v /= total;
  return JointPmf(like.axis_names(), like.axis_sizes(), std::move(probs));
}

}  // namespace

ProjectionResult i_project(const JointPmf& target,
                           const std::vector<MarginalConstraint>& constraints,
                           const ProjectOptions& opts) {
  std::vector<ConstraintView> views;
  views.reserve(constraints.size());
  for (const auto& c : constraints) views.push_back(make_view(target, c));
  check_pairwise_consistency(target, constraints);

  std::vector<double> q = target.probs();
  std::vector<double> marg;
  int cycles = 0;
  double residual = 0.0;

  if (views.empty()) {
    ProjectionResult res{0.0, target, 0, 0.0};
    return res;
  }

  for (cycles = 1; cycles <= opts.max_iters; ++cycles) {
    for (const auto& v : views) {
      current_marginal(q, v, marg);
      // Scale each cylinder to the prescribed mass. A cylinder with zero
      // current mass but positive prescribed mass cannot be rescued:
      // the target has no support there.
      for (std::size_t r = 0; r < v.rows; ++r) {
        if (marg[r] <= kSupportEps && v.target[r] > 1e-12)
          throw validation_error(
              "i_project: constraint places mass " + std::to_string(v.target[r]) +
              " on a region where the reference distribution has none");
      }
      for (std::size_t i = 0; i < q.size(); ++i) {
        double m = marg[v.cell_to_row[i]];
        double t = v.target[v.cell_to_row[i]];
        q[i] = m > kSupportEps ? q[i] * (t / m) : 0.0;
      }
    }
    residual = 0.0;
    for (const auto& v : views) {
      current_marginal(q, v, marg);
      residual = std::max(residual, deviation(marg, v));
    }
    if (opts.trace) opts.trace(wrap_distribution(target, q));
    if (residual < opts.tol) break;
  }
  if (cycles > opts.max_iters)
    throw convergence_error("i_project: no convergence after " +
                                std::to_string(opts.max_iters) +
                                " cycles (residual " + std::to_string(residual) + ")",
                            residual);

  ProjectionResult res{divergence_to_target(q, target),
                       wrap_distribution(target, std::move(q)), cycles, residual};
  return res;
}

double oracle_min_divergence(const JointPmf& target,
                             const std::vector<MarginalConstraint>& constraints,
                             const OracleOptions& opts) {
  std::vector<ConstraintView> views;
  for (const auto& c : constraints) views.push_back(make_view(target, c));
  check_pairwise_consistency(target, constraints);
  const std::size_t n = target.cell_count();

  auto penalty = [&](const std::vector<double>& q, std::vector<std::vector<double>>& margs) {
    double pen = 0.0;
    margs.resize(views.size());
    for (std::size_t k = 0; k < views.size(); ++k) {
      current_marginal(q, views[k], margs[k]);
      for (std::size_t r = 0; r < views[k].rows; ++r) {
        double d = margs[k][r] - views[k].target[r];
        pen += d * d;
      }
    }
    return pen;
  };

  double best = std::numeric_limits<double>::infinity();
  for (int rs = 0; rs < std::max(opts.restarts, 1); ++rs) {
    Rng rng = Rng::stream(opts.seed, static_cast<std::uint64_t>(rs));
    std::vector<double> q(n);
    if (rs == 0) {
      q = target.probs();
    } else {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        q[i] = target[i] > kSupportEps ? -std::log(1.0 - rng.next_unit() + 1e-18) : 0.0;
        total += q[i];
      }
      for (auto& v : q) v /= total;
    }

    std::vector<std::vector<double>> margs;
    std::vector<double> grad(n), trial(n);
    for (double kappa = 1e2; kappa <= 1e8 + 1.0; kappa *= 10.0) {
      double f = divergence_to_target(q, target) + kappa * penalty(q, margs);
      double eta = 0.25;
      int stalls = 0;
      for (int it = 0; it < opts.steps && stalls < 24; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
          if (q[i] <= 0.0 && target[i] <= kSupportEps) {
            grad[i] = 0.0;
            continue;
          }
          double qi = std::max(q[i], 1e-300);
          double g = std::log(qi / std::max(target[i], 1e-300)) + 1.0;
          for (std::size_t k = 0; k < views.size(); ++k) {
            std::size_t r = views[k].cell_to_row[i];
            g += 2.0 * kappa * (margs[k][r] - views[k].target[r]);
          }
          grad[i] = g;
        }
        // Multiplicative (mirror) step, renormalized; shift by the mean
        // gradient so the exponents stay in range.
        double gbar = 0.0;
        for (std::size_t i = 0; i < n; ++i) gbar += grad[i] * q[i];
        bool accepted = false;
        while (eta > 1e-10) {
          double total = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            double e = std::clamp(-eta * (grad[i] - gbar), -60.0, 60.0);
            trial[i] = q[i] > 0.0 ? q[i] * std::exp(e) : 0.0;
            total += trial[i];
          }
          for (auto& v : trial) v /= total;
          double ftrial = divergence_to_target(trial, target) + kappa * penalty(trial, margs);
          if (ftrial <= f + 1e-15) {
            double gain = f - ftrial;
            q.swap(trial);
            f = ftrial;
            eta = std::min(eta * 1.3, 4.0);
            accepted = true;
            stalls = gain < 1e-14 * std::max(1.0, std::fabs(f)) ? stalls + 1 : 0;
            break;
          }
          eta *= 0.5;
        }
        if (!accepted) {
          penalty(q, margs);  // restore marginals of the kept iterate
          break;
        }
      }
      penalty(q, margs);
    }
    best = std::min(best, divergence_to_target(q, target));
  }
  return best;
}

CertificateReport certify(const ProjectionResult& result, const JointPmf& target,
                          const std::vector<MarginalConstraint>& constraints,
                          double tol) {
  CertificateReport rep;
  std::vector<ConstraintView> views;
  for (const auto& c : constraints) views.push_back(make_view(target, c));
  const auto& q = result.argmin.probs();

  // (a) constraint residuals
  rep.max_constraint_residual = 0.0;
  std::vector<double> marg;
  for (const auto& v : views) {
    current_marginal(q, v, marg);
    rep.max_constraint_residual = std::max(rep.max_constraint_residual, deviation(marg, v));
  }
  rep.constraints_ok = rep.max_constraint_residual < 10.0 * tol;

  // (b) product form: log(q/target) must lie in the span of the
  // constraint cylinder indicators over the support.
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (q[i] > kSupportEps && target[i] > kSupportEps) support.push_back(i);
  std::size_t cols = 1;  // constant column soaks up normalization
  for (const auto& v : views) cols += v.rows;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(support.size()),
                                            static_cast<Eigen::Index>(cols));
  Eigen::VectorXd ell(static_cast<Eigen::Index>(support.size()));
  for (std::size_t s = 0; s < support.size(); ++s) {
    std::size_t i = support[s];
    ell(static_cast<Eigen::Index>(s)) = std::log(q[i] / target[i]);
    a(static_cast<Eigen::Index>(s), 0) = 1.0;
    std::size_t off = 1;
    for (const auto& v : views) {
      a(static_cast<Eigen::Index>(s),
        static_cast<Eigen::Index>(off + v.cell_to_row[i])) = 1.0;
      off += v.rows;
    }
  }
  if (support.empty()) {
    rep.factorization_ok = false;
    rep.detail = "empty support";
    return rep;
  }
  Eigen::VectorXd g = a.colPivHouseholderQr().solve(ell);
  rep.factor_residual = (a * g - ell).lpNorm<Eigen::Infinity>();
  rep.factorization_ok = rep.factor_residual < 1e-6;

  // (c) value consistency
  double value = divergence_to_target(q, target);
  rep.value_gap = std::fabs(value - result.value);
  rep.value_ok = rep.value_gap < 1e-10 * std::max(1.0, std::fabs(result.value)) + 1e-12;

  rep.ok = rep.constraints_ok && rep.factorization_ok && rep.value_ok;
  if (!rep.ok) {
    std::ostringstream os;
    if (!rep.constraints_ok)
      os << "constraint residual " << rep.max_constraint_residual << " too large; ";
    if (!rep.factorization_ok)
      os << "log-ratio is not a sum of cylinder functions (residual "
         << rep.factor_residual << "); ";
    if (!rep.value_ok) os << "stored value off by " << rep.value_gap << "; ";
    rep.detail = os.str();
  }
  return rep;
}

}  // namespace hyptest
