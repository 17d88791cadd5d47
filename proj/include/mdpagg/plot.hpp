#pragma once

#include <string>
#include <vector>

#include "mdpagg/experiment.hpp"

namespace mdpagg {

// Inverse of write_summary_csv. Throws IoError on read/parse failure.
SummaryTables read_summary_csv(const std::string& path);

const std::vector<std::string>& available_figures();

// Renders one figure family from summary tables into out_dir: one
// self-contained SVG per panel plus a CSV holding exactly the rows the
// panel used. Returns the paths written. Statistics are taken verbatim
// from the summary; nothing is recomputed here. Throws
// std::invalid_argument on an unknown figure name.
std::vector<std::string> render_figure(const SummaryTables& summary,
                                       const std::string& figure,
                                       const std::string& out_dir);

}  // namespace mdpagg
