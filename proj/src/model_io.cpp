#include "hyptest/model_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>

namespace hyptest {

namespace {

using nlohmann::json;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw validation_error("'" + path + "' is not valid JSON: " + e.what());
  }
  return j;
}

std::vector<double> normalized_pmf_array(const json& arr, std::size_t cells,
                                         const std::string& what) {
  if (!arr.is_array() || arr.size() != cells)
    throw validation_error(what + " must be an array of " + std::to_string(cells) +
                           " probabilities");
  std::vector<double> v;
  v.reserve(cells);
  double total = 0.0;
  for (const auto& e : arr) {
    if (!e.is_number()) throw validation_error(what + " entries must be numbers");
    double x = e.get<double>();
    if (!(x >= 0.0) || !std::isfinite(x))
      throw validation_error(what + " entries must be finite and nonnegative");
    v.push_back(x);
    total += x;
  }
  if (std::fabs(total - 1.0) > 1e-9)
    throw validation_error(what + " must sum to one within 1e-9 (got " +
                           std::to_string(total) + ")");
  for (auto& x : v) x /= total;
  return v;
}

std::vector<double> channel_rows(const json& j, int rows, int cols,
                                 const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw validation_error(what + " must have " + std::to_string(rows) + " rows");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      throw validation_error(what + " rows must have " + std::to_string(cols) +
                             " entries");
    double total = 0.0;
    std::vector<double> r;
    for (const auto& e : row) {
      double x = e.get<double>();
      if (!(x >= 0.0) || !std::isfinite(x))
        throw validation_error(what + " entries must be finite and nonnegative");
      r.push_back(x);
      total += x;
    }
    if (std::fabs(total - 1.0) > 1e-9)
      throw validation_error(what + " rows must sum to one within 1e-9");
    for (double x : r) out.push_back(x / total);
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

ModelFile load_model(const std::string& path) {
  json j = read_json(path);
  if (!j.contains("alphabet_sizes") || !j.contains("p") || !j.contains("p_bar"))
    throw validation_error("model needs alphabet_sizes, p and p_bar fields");
  const auto& sizes = j["alphabet_sizes"];
  for (const char* key : {"x", "y1", "y2"})
    if (!sizes.contains(key) || !sizes[key].is_number_integer() ||
        sizes[key].get<int>() < 1)
      throw validation_error("alphabet_sizes needs positive integers x, y1, y2");
  int nx = sizes["x"].get<int>();
  int ny1 = sizes["y1"].get<int>();
  int ny2 = sizes["y2"].get<int>();
  std::size_t cells = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny1) *
                      static_cast<std::size_t>(ny2);
  std::vector<double> p = normalized_pmf_array(j["p"], cells, "p");
  std::vector<double> pb = normalized_pmf_array(j["p_bar"], cells, "p_bar");
  JointPmf jp({"X", "Y1", "Y2"}, {nx, ny1, ny2}, std::move(p));
  JointPmf jpb({"X", "Y1", "Y2"}, {nx, ny1, ny2}, std::move(pb));
  ModelFile out{j.value("name", ""), HypothesisPair(std::move(jp), std::move(jpb))};
  return out;
}

void save_model(const std::string& path, const HypothesisPair& pair,
                const std::string& name, const std::string& notes) {
  json j;
  if (!name.empty()) j["name"] = name;
  if (!notes.empty()) j["notes"] = notes;
  j["alphabet_sizes"] = {{"x", pair.p.axis_sizes()[0]},
                         {"y1", pair.p.axis_sizes()[1]},
                         {"y2", pair.p.axis_sizes()[2]}};
  j["p"] = pair.p.probs();
  j["p_bar"] = pair.p_bar.probs();
  std::ofstream out(path);
  if (!out) throw validation_error("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

AuxChannels load_aux_channels(const std::string& path, const HypothesisPair& pair) {
  json j = read_json(path);
  if (!j.contains("u_given_x") || !j.contains("v_given_uy1"))
    throw validation_error("aux file needs u_given_x and v_given_uy1");
  int nx = pair.p.axis_sizes()[0];
  int ny1 = pair.p.axis_sizes()[1];
  const auto& ju = j["u_given_x"];
  if (!ju.is_array() || ju.empty() || !ju[0].is_array())
    throw validation_error("u_given_x must be a matrix");
  int nu = static_cast<int>(ju[0].size());
  CondChannel u({"X"}, {nx}, "U", nu, channel_rows(ju, nx, nu, "u_given_x"));

  const auto& jv = j["v_given_uy1"];
  if (!jv.is_array() || static_cast<int>(jv.size()) != nu)
    throw validation_error("v_given_uy1 must have one block per U symbol");
  std::vector<double> vrows;
  int nv = -1;
  for (const auto& block : jv) {
    if (!block.is_array() || static_cast<int>(block.size()) != ny1)
      throw validation_error("v_given_uy1 blocks must have one row per Y1 symbol");
    for (const auto& row : block) {
      if (!row.is_array()) throw validation_error("v_given_uy1 rows must be arrays");
      if (nv < 0) nv = static_cast<int>(row.size());
      auto r = channel_rows(json::array({row}), 1, nv, "v_given_uy1");
      vrows.insert(vrows.end(), r.begin(), r.end());
    }
  }
  CondChannel v({"U", "Y1"}, {nu, ny1}, "V", nv, std::move(vrows));

  AuxChannels aux{std::move(u), std::move(v), std::nullopt};
  if (j.contains("u1_given_x")) {
    const auto& ju1 = j["u1_given_x"];
    int nu1 = static_cast<int>(ju1[0].size());
    aux.u1_given_x =
        CondChannel({"X"}, {nx}, "U1", nu1, channel_rows(ju1, nx, nu1, "u1_given_x"));
  }
  return aux;
}

std::string aux_channels_to_json(const AuxChannels& aux) {
  json j;
  {
    json m = json::array();
    for (std::size_t r = 0; r < aux.u_given_x.row_count(); ++r) {
      auto row = aux.u_given_x.row(r);
      m.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["u_given_x"] = m;
  }
  {
    int nu = aux.v_given_uy1.input_sizes[0];
    int ny1 = aux.v_given_uy1.input_sizes[1];
    json blocks = json::array();
    for (int u = 0; u < nu; ++u) {
      json block = json::array();
      for (int y = 0; y < ny1; ++y) {
        auto row = aux.v_given_uy1.row(static_cast<std::size_t>(u * ny1 + y));
        block.push_back(std::vector<double>(row.begin(), row.end()));
      }
      blocks.push_back(block);
    }
    j["v_given_uy1"] = blocks;
  }
  if (aux.u1_given_x.has_value()) {
    json m = json::array();
    for (std::size_t r = 0; r < aux.u1_given_x->row_count(); ++r) {
      auto row = aux.u1_given_x->row(r);
      m.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["u1_given_x"] = m;
  }
  return j.dump(2);
}

}  // namespace hyptest
