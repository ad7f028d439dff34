#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sfwi::harness {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Overlaid line plot as a standalone SVG. With log_y, non-positive samples
/// are dropped.
void write_line_plot(const std::filesystem::path& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<Series>& series, bool log_y = false);

}  // namespace sfwi::harness
