#ifndef HYPTEST_MODEL_IO_HPP
#define HYPTEST_MODEL_IO_HPP

#include <string>

#include "hyptest/pmf.hpp"
#include "hyptest/positive_rate.hpp"

namespace hyptest {

struct ModelFile {
  std::string name;
  HypothesisPair pair;
};

// UTF-8 JSON model: alphabet_sizes {x, y1, y2}, flat arrays p and p_bar
// in row-major (x, y1, y2) order. Arrays must sum to one within 1e-9 and
// are normalized exactly on ingestion.
ModelFile load_model(const std::string& path);
void save_model(const std::string& path, const HypothesisPair& pair,
                const std::string& name = "", const std::string& notes = "");

// Auxiliary channels as JSON: u_given_x is |X| rows of |U|; v_given_uy1
// is [u][y1] rows of |V|; u1_given_x is optional.
AuxChannels load_aux_channels(const std::string& path, const HypothesisPair& pair);
std::string aux_channels_to_json(const AuxChannels& aux);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace hyptest

#endif
