#ifndef HYPTEST_SVG_HPP
#define HYPTEST_SVG_HPP

#include <array>
#include <string>
#include <vector>

namespace hyptest {

// Minimal self-contained SVG of an exponent frontier: axes, the frontier
// polyline (staircase toward the origin for finite point sets), and a
// marker per Pareto point. Anything fancier is the caller's job via CSV.
std::string region_svg(const std::vector<std::array<double, 2>>& points,
                       const std::string& unit, const std::string& title = "");

}  // namespace hyptest

#endif
