#include "svg.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace cli {

namespace {

const char* method_color(const std::string& method) {
  if (method == "ml") return "#1f77b4";
  if (method == "ncd-param") return "#ff7f0e";
  if (method == "ncd-semi") return "#2ca02c";
  if (method == "ncd-ignore") return "#d62728";
  return "#7f7f7f";
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string render_rmse_svg(const std::vector<ptrans::SummaryRow>& summary) {
  if (summary.empty()) throw std::invalid_argument("nothing to plot");

  std::vector<int> ks;
  std::vector<int> ns;
  std::vector<std::string> methods;
  for (const auto& row : summary) {
    if (std::find(ks.begin(), ks.end(), row.k) == ks.end()) ks.push_back(row.k);
    if (std::find(ns.begin(), ns.end(), row.n) == ns.end()) ns.push_back(row.n);
    if (std::find(methods.begin(), methods.end(), row.method) == methods.end())
      methods.push_back(row.method);
  }
  std::sort(ks.begin(), ks.end());
  std::sort(ns.begin(), ns.end());
  std::sort(methods.begin(), methods.end());

  const auto find_row = [&](const std::string& method, int n,
                            int k) -> const ptrans::SummaryRow* {
    for (const auto& row : summary)
      if (row.method == method && row.n == n && row.k == k) return &row;
    return nullptr;
  };
  const auto rmse_of = [](const ptrans::SummaryRow& row, int param) {
    return param == 0 ? row.rmse1 : row.rmse2;
  };

  // Panel geometry: columns indexed by k, rows by parameter.
  const double pw = 320.0, ph = 240.0;
  const double ml = 56.0, mr = 16.0, mt = 30.0, mb = 42.0;
  const double legend_h = 26.0;
  const double width = pw * ks.size();
  const double height = legend_h + 2.0 * ph;

  double x_lo = ns.front(), x_hi = ns.back();
  if (x_lo == x_hi) {
    x_lo -= 1.0;
    x_hi += 1.0;
  }

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
      << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width) << " "
      << num(height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Legend across the top.
  double lx = ml;
  for (const auto& method : methods) {
    svg << "<line x1=\"" << num(lx) << "\" y1=\"14\" x2=\"" << num(lx + 22)
        << "\" y2=\"14\" stroke=\"" << method_color(method) << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << num(lx + 27) << "\" y=\"18\">" << method << "</text>\n";
    lx += 34.0 + 7.5 * method.size();
  }

  for (std::size_t col = 0; col < ks.size(); ++col) {
    for (int param = 0; param < 2; ++param) {
      const double ox = pw * col;
      const double oy = legend_h + ph * param;
      const double plot_w = pw - ml - mr;
      const double plot_h = ph - mt - mb;

      double y_hi = 0.0;
      for (const auto& method : methods)
        for (int n : ns)
          if (const auto* row = find_row(method, n, ks[col]); row && row->count > 0)
            y_hi = std::max(y_hi, rmse_of(*row, param));
      if (y_hi <= 0.0) y_hi = 1.0;
      y_hi *= 1.05;

      const auto px = [&](double n) {
        return ox + ml + (n - x_lo) / (x_hi - x_lo) * plot_w;
      };
      const auto py = [&](double v) { return oy + mt + (1.0 - v / y_hi) * plot_h; };

      svg << "<text x=\"" << num(ox + ml) << "\" y=\"" << num(oy + mt - 8)
          << "\">theta" << (param + 1) << " rmse, k = " << ks[col] << "</text>\n";
      // Axes.
      svg << "<line x1=\"" << num(ox + ml) << "\" y1=\"" << num(oy + mt) << "\" x2=\""
          << num(ox + ml) << "\" y2=\"" << num(oy + mt + plot_h)
          << "\" stroke=\"black\"/>\n"
          << "<line x1=\"" << num(ox + ml) << "\" y1=\"" << num(oy + mt + plot_h)
          << "\" x2=\"" << num(ox + ml + plot_w) << "\" y2=\"" << num(oy + mt + plot_h)
          << "\" stroke=\"black\"/>\n";
      svg << "<text x=\"" << num(ox + ml - 6) << "\" y=\"" << num(oy + mt + 4)
          << "\" text-anchor=\"end\">" << num(y_hi) << "</text>\n"
          << "<text x=\"" << num(ox + ml - 6) << "\" y=\"" << num(oy + mt + plot_h + 4)
          << "\" text-anchor=\"end\">0</text>\n";
      for (int n : ns) {
        svg << "<text x=\"" << num(px(n)) << "\" y=\"" << num(oy + mt + plot_h + 16)
            << "\" text-anchor=\"middle\">" << n << "</text>\n";
      }
      svg << "<text x=\"" << num(ox + ml + plot_w / 2)
          << "\" y=\"" << num(oy + mt + plot_h + 32)
          << "\" text-anchor=\"middle\">n</text>\n";

      for (const auto& method : methods) {
        std::ostringstream pts;
        bool any = false;
        for (int n : ns) {
          if (const auto* row = find_row(method, n, ks[col]); row && row->count > 0) {
            pts << (any ? " " : "") << num(px(n)) << "," << num(py(rmse_of(*row, param)));
            any = true;
          }
        }
        if (!any) continue;
        svg << "<polyline fill=\"none\" stroke=\"" << method_color(method)
            << "\" stroke-width=\"2\" points=\"" << pts.str() << "\"/>\n";
      }
    }
  }

  svg << "</svg>\n";
  return svg.str();
}

}  // namespace cli
