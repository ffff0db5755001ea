#include "hyptest/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace hyptest {

namespace {

// Compensated (Kahan) accumulator; the information quantities are later
// compared across algebraic routes at 1e-10, which plain summation over
// a few hundred cells already meets, but this keeps the slack comfortable.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    double y = x - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

std::vector<std::size_t> make_strides(const std::vector<int>& sizes) {
  std::vector<std::size_t> strides(sizes.size(), 1);
  for (int i = static_cast<int>(sizes.size()) - 2; i >= 0; --i)
    strides[static_cast<std::size_t>(i)] =
        strides[static_cast<std::size_t>(i) + 1] *
        static_cast<std::size_t>(sizes[static_cast<std::size_t>(i) + 1]);
  return strides;
}

std::string cell_label(const JointPmf& pmf, std::size_t flat) {
  std::vector<int> idx(static_cast<std::size_t>(pmf.rank()));
  pmf.decode(flat, idx);
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) os << ",";
    os << pmf.axis_names()[i] << "=" << idx[i];
  }
  os << ")";
  return os.str();
}

}  // namespace

JointPmf::JointPmf(std::vector<std::string> axis_names, std::vector<int> axis_sizes,
                   std::vector<double> probs)
    : names_(std::move(axis_names)), sizes_(std::move(axis_sizes)),
      probs_(std::move(probs)) {
  if (names_.empty() || names_.size() != sizes_.size())
    throw validation_error("pmf: axis names and sizes must be non-empty and match");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (sizes_[i] <= 0) throw validation_error("pmf: axis sizes must be positive");
    for (std::size_t j = i + 1; j < names_.size(); ++j)
      if (names_[i] == names_[j])
        throw validation_error("pmf: duplicate axis label '" + names_[i] + "'");
  }
  std::size_t cells = 1;
  for (int s : sizes_) cells *= static_cast<std::size_t>(s);
  if (probs_.size() != cells)
    throw validation_error("pmf: cell count does not match axis sizes");
  KahanSum total;
  for (double v : probs_) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw validation_error("pmf: entries must be finite and nonnegative");
    total.add(v);
  }
  if (std::fabs(total.value() - 1.0) > kMassTol)
    throw validation_error("pmf: entries must sum to one (got " +
                           std::to_string(total.value()) + ")");
  strides_ = make_strides(sizes_);
}

JointPmf JointPmf::uniform(std::vector<std::string> axis_names,
                           std::vector<int> axis_sizes) {
  std::size_t cells = 1;
  for (int s : axis_sizes) cells *= static_cast<std::size_t>(std::max(s, 0));
  if (cells == 0) throw validation_error("pmf: axis sizes must be positive");
  std::vector<double> probs(cells, 1.0 / static_cast<double>(cells));
  return JointPmf(std::move(axis_names), std::move(axis_sizes), std::move(probs));
}

bool JointPmf::has_axis(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

int JointPmf::axis_index(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end())
    throw validation_error("pmf: unknown axis label '" + std::string(name) + "'");
  return static_cast<int>(it - names_.begin());
}

int JointPmf::axis_size(std::string_view name) const {
  return sizes_[static_cast<std::size_t>(axis_index(name))];
}

double JointPmf::at(std::span<const int> idx) const { return probs_[encode(idx)]; }

void JointPmf::decode(std::size_t flat, std::span<int> idx) const {
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    idx[i] = static_cast<int>(flat / strides_[i]);
    flat %= strides_[i];
  }
}

std::size_t JointPmf::encode(std::span<const int> idx) const {
  std::size_t flat = 0;
  for (std::size_t i = 0; i < sizes_.size(); ++i)
    flat += static_cast<std::size_t>(idx[i]) * strides_[i];
  return flat;
}

bool JointPmf::full_support() const {
  return std::all_of(probs_.begin(), probs_.end(),
                     [](double v) { return v > kSupportEps; });
}

CondChannel::CondChannel(std::vector<std::string> input_axes_,
                         std::vector<int> input_sizes_, std::string output_axis_,
                         int output_size_, std::vector<double> rows_)
    : input_axes(std::move(input_axes_)), input_sizes(std::move(input_sizes_)),
      output_axis(std::move(output_axis_)), output_size(output_size_),
      rows(std::move(rows_)) {
  if (input_axes.empty() || input_axes.size() != input_sizes.size())
    throw validation_error("channel: input axes and sizes must match");
  if (output_size <= 0) throw validation_error("channel: output size must be positive");
  std::size_t combos = 1;
  for (int s : input_sizes) {
    if (s <= 0) throw validation_error("channel: input sizes must be positive");
    combos *= static_cast<std::size_t>(s);
  }
  if (rows.size() != combos * static_cast<std::size_t>(output_size))
    throw validation_error("channel: row table has the wrong size");
  for (std::size_t r = 0; r < combos; ++r) {
    KahanSum s;
    for (int v = 0; v < output_size; ++v) {
      double x = rows[r * static_cast<std::size_t>(output_size) +
                      static_cast<std::size_t>(v)];
      if (!(x >= 0.0) || !std::isfinite(x))
        throw validation_error("channel: entries must be finite and nonnegative");
      s.add(x);
    }
    if (std::fabs(s.value() - 1.0) > kMassTol)
      throw validation_error("channel: row " + std::to_string(r) +
                             " does not sum to one");
  }
}

std::size_t CondChannel::row_count() const {
  return rows.size() / static_cast<std::size_t>(output_size);
}

std::span<const double> CondChannel::row(std::size_t r) const {
  return {rows.data() + r * static_cast<std::size_t>(output_size),
          static_cast<std::size_t>(output_size)};
}

CondChannel CondChannel::deterministic(const std::string& input_axis, int input_size,
                                       const std::string& output_axis, int output_size,
                                       const std::vector<int>& map) {
  if (static_cast<int>(map.size()) != input_size)
    throw validation_error("channel: map size must equal the input alphabet");
  std::vector<double> rows(static_cast<std::size_t>(input_size) *
                               static_cast<std::size_t>(output_size),
                           0.0);
  for (int x = 0; x < input_size; ++x) {
    if (map[static_cast<std::size_t>(x)] < 0 ||
        map[static_cast<std::size_t>(x)] >= output_size)
      throw validation_error("channel: map value out of range");
    rows[static_cast<std::size_t>(x) * static_cast<std::size_t>(output_size) +
         static_cast<std::size_t>(map[static_cast<std::size_t>(x)])] = 1.0;
  }
  return CondChannel({input_axis}, {input_size}, output_axis, output_size,
                     std::move(rows));
}

CondChannel CondChannel::constant(const std::string& input_axis, int input_size,
                                  const std::string& output_axis,
                                  const std::vector<double>& dist) {
  std::vector<double> rows;
  rows.reserve(static_cast<std::size_t>(input_size) * dist.size());
  for (int x = 0; x < input_size; ++x)
    rows.insert(rows.end(), dist.begin(), dist.end());
  return CondChannel({input_axis}, {input_size}, output_axis,
                     static_cast<int>(dist.size()), std::move(rows));
}

HypothesisPair::HypothesisPair(JointPmf p_, JointPmf p_bar_)
    : p(std::move(p_)), p_bar(std::move(p_bar_)) {
  if (p.axis_names() != p_bar.axis_names() || p.axis_sizes() != p_bar.axis_sizes())
    throw validation_error("hypothesis pair: p and p_bar must share one alphabet");
}

bool HypothesisPair::zero_rate_support() const {
  if (!p_bar.full_support()) return false;
  std::vector<std::string> xy1;
  xy1.push_back(p.axis_names()[0]);
  xy1.push_back(p.axis_names()[1]);
  return marginal(p, xy1).full_support();
}

void HypothesisPair::require_zero_rate_support() const {
  if (!zero_rate_support())
    throw precondition_error(
        "zero-rate regions require p_bar(x,y1,y2) > 0 everywhere and "
        "p(x,y1) > 0 on the (X,Y1)-marginal");
}

bool HypothesisPair::equal_x_marginals(double tol) const {
  std::vector<std::string> x{p.axis_names()[0]};
  return linf_distance(marginal(p, x), marginal(p_bar, x)) < tol;
}

JointPmf marginal(const JointPmf& pmf, const std::vector<std::string>& axes) {
  if (axes.empty()) throw validation_error("marginal: axis subset must be non-empty");
  std::vector<bool> keep(static_cast<std::size_t>(pmf.rank()), false);
  for (const auto& name : axes)
    keep[static_cast<std::size_t>(pmf.axis_index(name))] = true;

  std::vector<std::string> out_names;
  std::vector<int> out_sizes;
  std::vector<std::size_t> out_axis;  // positions of the retained axes
  for (int i = 0; i < pmf.rank(); ++i)
    if (keep[static_cast<std::size_t>(i)]) {
      out_names.push_back(pmf.axis_names()[static_cast<std::size_t>(i)]);
      out_sizes.push_back(pmf.axis_sizes()[static_cast<std::size_t>(i)]);
      out_axis.push_back(static_cast<std::size_t>(i));
    }

  std::vector<std::size_t> out_strides = make_strides(out_sizes);
  std::size_t out_cells = 1;
  for (int s : out_sizes) out_cells *= static_cast<std::size_t>(s);

  // Map every source cell to its target cell once; the map is the same
  // for repeated calls but cheap enough to rebuild.
  std::vector<double> out(out_cells, 0.0);
  std::vector<int> idx(static_cast<std::size_t>(pmf.rank()));
  for (std::size_t flat = 0; flat < pmf.cell_count(); ++flat) {
    pmf.decode(flat, idx);
    std::size_t o = 0;
    for (std::size_t j = 0; j < out_axis.size(); ++j)
      o += static_cast<std::size_t>(idx[out_axis[j]]) * out_strides[j];
    out[o] += pmf[flat];
  }
  return JointPmf(std::move(out_names), std::move(out_sizes), std::move(out));
}

JointPmf reorder_axes(const JointPmf& pmf, const std::vector<std::string>& order) {
  if (order.size() != static_cast<std::size_t>(pmf.rank()))
    throw validation_error("reorder: permutation must list every axis");
  if (order == pmf.axis_names()) return pmf;
  std::vector<int> perm;  // perm[k] = source axis of output axis k
  std::vector<int> out_sizes;
  for (const auto& name : order) {
    perm.push_back(pmf.axis_index(name));
    out_sizes.push_back(pmf.axis_size(name));
  }
  std::vector<std::size_t> out_strides = make_strides(out_sizes);
  std::vector<double> out(pmf.cell_count());
  std::vector<int> idx(static_cast<std::size_t>(pmf.rank()));
  for (std::size_t flat = 0; flat < pmf.cell_count(); ++flat) {
    pmf.decode(flat, idx);
    std::size_t o = 0;
    for (std::size_t k = 0; k < perm.size(); ++k)
      o += static_cast<std::size_t>(idx[static_cast<std::size_t>(perm[k])]) *
           out_strides[k];
    out[o] = pmf[flat];
  }
  return JointPmf(order, std::move(out_sizes), std::move(out));
}

double kl_divergence(const JointPmf& p, const JointPmf& q) {
  if (p.axis_names() != q.axis_names() || p.axis_sizes() != q.axis_sizes())
    throw validation_error("kl: distributions must share one alphabet");
  KahanSum acc;
  for (std::size_t i = 0; i < p.cell_count(); ++i) {
    double pi = p[i];
    if (pi <= kSupportEps) continue;
    double qi = q[i];
    if (qi <= kSupportEps)
      throw divergence_infinite_error(
          "kl: absolute continuity fails at cell " + cell_label(p, i), i);
    acc.add(pi * std::log(pi / qi));
  }
  return std::max(acc.value(), 0.0);
}

namespace {

double plain_entropy(const JointPmf& pmf) {
  KahanSum acc;
  for (std::size_t i = 0; i < pmf.cell_count(); ++i) {
    double v = pmf[i];
    if (v > kSupportEps) acc.add(-v * std::log(v));
  }
  return acc.value();
}

std::vector<std::string> axis_union(const JointPmf& pmf,
                                    std::initializer_list<const std::vector<std::string>*> parts) {
  std::vector<bool> keep(static_cast<std::size_t>(pmf.rank()), false);
  for (const auto* part : parts)
    for (const auto& name : *part)
      keep[static_cast<std::size_t>(pmf.axis_index(name))] = true;
  std::vector<std::string> out;
  for (int i = 0; i < pmf.rank(); ++i)
    if (keep[static_cast<std::size_t>(i)])
      out.push_back(pmf.axis_names()[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

double entropy(const JointPmf& pmf, const std::vector<std::string>& axes,
               const std::vector<std::string>& cond) {
  if (cond.empty()) return plain_entropy(marginal(pmf, axes));
  auto joint = axis_union(pmf, {&axes, &cond});
  // H(A|C) = H(A,C) - H(C)
  return plain_entropy(marginal(pmf, joint)) - plain_entropy(marginal(pmf, cond));
}

double mutual_information(const JointPmf& pmf, const std::vector<std::string>& axes_a,
                          const std::vector<std::string>& axes_b,
                          const std::vector<std::string>& axes_cond) {
  std::vector<bool> seen(static_cast<std::size_t>(pmf.rank()), false);
  for (const auto* group : {&axes_a, &axes_b, &axes_cond})
    for (const auto& name : *group) {
      auto i = static_cast<std::size_t>(pmf.axis_index(name));
      if (seen[i])
        throw validation_error("mutual information: axis sets must be disjoint");
      seen[i] = true;
    }
  // I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)
  auto ac = axis_union(pmf, {&axes_a, &axes_cond});
  auto bc = axis_union(pmf, {&axes_b, &axes_cond});
  auto abc = axis_union(pmf, {&axes_a, &axes_b, &axes_cond});
  double h_ac = plain_entropy(marginal(pmf, ac));
  double h_bc = plain_entropy(marginal(pmf, bc));
  double h_abc = plain_entropy(marginal(pmf, abc));
  double h_c = axes_cond.empty() ? 0.0 : plain_entropy(marginal(pmf, axes_cond));
  return std::max(h_ac + h_bc - h_abc - h_c, 0.0);
}

JointPmf attach_channel(const JointPmf& pmf, const CondChannel& chan) {
  if (pmf.has_axis(chan.output_axis))
    throw validation_error("attach: axis label '" + chan.output_axis +
                           "' already present");
  std::vector<int> in_axis;
  for (std::size_t j = 0; j < chan.input_axes.size(); ++j) {
    int a = pmf.axis_index(chan.input_axes[j]);
    if (pmf.axis_sizes()[static_cast<std::size_t>(a)] != chan.input_sizes[j])
      throw validation_error("attach: alphabet size mismatch on axis '" +
                             chan.input_axes[j] + "'");
    in_axis.push_back(a);
  }
  std::vector<std::size_t> in_strides = make_strides(chan.input_sizes);

  std::vector<std::string> out_names = pmf.axis_names();
  out_names.push_back(chan.output_axis);
  std::vector<int> out_sizes = pmf.axis_sizes();
  out_sizes.push_back(chan.output_size);

  const auto m = static_cast<std::size_t>(chan.output_size);
  std::vector<double> out(pmf.cell_count() * m);
  std::vector<int> idx(static_cast<std::size_t>(pmf.rank()));
  for (std::size_t flat = 0; flat < pmf.cell_count(); ++flat) {
    pmf.decode(flat, idx);
    std::size_t row = 0;
    for (std::size_t j = 0; j < in_axis.size(); ++j)
      row += static_cast<std::size_t>(idx[static_cast<std::size_t>(in_axis[j])]) *
             in_strides[j];
    auto r = chan.row(row);
    double base = pmf[flat];
    for (std::size_t v = 0; v < m; ++v) out[flat * m + v] = base * r[v];
  }
  return JointPmf(std::move(out_names), std::move(out_sizes), std::move(out));
}

JointPmf tensor_product(const JointPmf& a, const JointPmf& b) {
  for (const auto& name : b.axis_names())
    if (a.has_axis(name))
      throw validation_error("product: axis label '" + name + "' appears twice");
  std::vector<std::string> names = a.axis_names();
  names.insert(names.end(), b.axis_names().begin(), b.axis_names().end());
  std::vector<int> sizes = a.axis_sizes();
  sizes.insert(sizes.end(), b.axis_sizes().begin(), b.axis_sizes().end());
  std::vector<double> out(a.cell_count() * b.cell_count());
  for (std::size_t i = 0; i < a.cell_count(); ++i)
    for (std::size_t j = 0; j < b.cell_count(); ++j)
      out[i * b.cell_count() + j] = a[i] * b[j];
  return JointPmf(std::move(names), std::move(sizes), std::move(out));
}

double linf_distance(const JointPmf& a, const JointPmf& b) {
  if (a.axis_names() != b.axis_names() || a.axis_sizes() != b.axis_sizes())
    throw validation_error("linf: distributions must share one alphabet");
  double d = 0.0;
  for (std::size_t i = 0; i < a.cell_count(); ++i)
    d = std::max(d, std::fabs(a[i] - b[i]));
  return d;
}

}  // namespace hyptest
