#pragma once

#include <string>
#include <vector>

#include "ptrans/chain.hpp"

namespace cli {

// Minimal hand-rolled line chart of the benchmark summary: RMSE against n,
// one polyline per method, one column of panels per k (top row theta_1,
// bottom row theta_2).  Returns the SVG document.
std::string render_rmse_svg(const std::vector<ptrans::SummaryRow>& summary);

}  // namespace cli
