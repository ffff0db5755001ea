#include "hyptest/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hyptest {

std::string region_svg(const std::vector<std::array<double, 2>>& points,
                       const std::string& unit, const std::string& title) {
  const double w = 560.0, h = 420.0;
  const double ml = 70.0, mr = 20.0, mt = 36.0, mb = 56.0;
  double max1 = 1e-12, max2 = 1e-12;
  for (const auto& p : points) {
    max1 = std::max(max1, p[0]);
    max2 = std::max(max2, p[1]);
  }
  max1 *= 1.08;
  max2 *= 1.08;
  auto sx = [&](double t1) { return ml + (w - ml - mr) * (t1 / max1); };
  auto sy = [&](double t2) { return h - mb - (h - mt - mb) * (t2 / max2); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
     << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    os << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";

  // axes with a few ticks
  os << "<g stroke=\"black\" stroke-width=\"1\">\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
     << "\" y2=\"" << h - mb << "\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << ml << "\" y2=\""
     << mt << "\"/>\n";
  os << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    double t1 = max1 * i / 4.0, t2 = max2 * i / 4.0;
    os << "<line x1=\"" << sx(t1) << "\" y1=\"" << h - mb << "\" x2=\"" << sx(t1)
       << "\" y2=\"" << h - mb + 5 << "\" stroke=\"black\"/>";
    os << "<text x=\"" << sx(t1) << "\" y=\"" << h - mb + 18
       << "\" text-anchor=\"middle\">" << std::fixed;
    os.precision(3);
    os << t1 << "</text>\n";
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << sy(t2) << "\" x2=\"" << ml
       << "\" y2=\"" << sy(t2) << "\" stroke=\"black\"/>";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << sy(t2) + 4
       << "\" text-anchor=\"end\">" << t2 << "</text>\n";
  }
  os << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 16
     << "\" text-anchor=\"middle\">theta1 (" << unit << ")</text>\n";
  os << "<text x=\"16\" y=\"" << (mt + h - mb) / 2
     << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (mt + h - mb) / 2
     << ")\">theta2 (" << unit << ")</text>\n</g>\n";

  if (!points.empty()) {
    // staircase from the theta2-axis through the points down to the theta1-axis
    std::ostringstream path;
    path << "M " << sx(0) << " " << sy(points.front()[1]) << " ";
    for (std::size_t i = 0; i < points.size(); ++i) {
      path << "L " << sx(points[i][0]) << " " << sy(points[i][1]) << " ";
      double drop = i + 1 < points.size() ? points[i + 1][1] : 0.0;
      path << "L " << sx(points[i][0]) << " " << sy(drop) << " ";
    }
    os << "<path d=\"" << path.str()
       << "\" fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\"/>\n";
    for (const auto& p : points)
      os << "<circle cx=\"" << sx(p[0]) << "\" cy=\"" << sy(p[1])
         << "\" r=\"3.5\" fill=\"#d1495b\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace hyptest
