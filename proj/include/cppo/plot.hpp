#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cppo {

struct PlotSeries {
  std::string label;
  std::vector<double> episodes;
  std::vector<double> returns;
  std::vector<double> smoothed;
  std::vector<double> stage_switches;  // first episode of each stage after the first
};

/// Reads `episode` and `return` (and `stage` if present) from a training CSV
/// and smooths the returns. The window shrinks to fit short series.
/// Throws CsvError on missing columns.
PlotSeries load_training_series(const std::filesystem::path& csv, const std::string& label, int window = 101,
                                int poly_order = 2);

/// Raw returns faint, smoothed curves bold, dashed verticals at stage switches, legend.
std::string training_svg(const std::vector<PlotSeries>& series, const std::string& title = "episode return");

/// Columns: series,episode,return,smoothed.
std::string smoothed_csv(const std::vector<PlotSeries>& series);

}  // namespace cppo
