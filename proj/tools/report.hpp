#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dspear::cli {

struct ReportSummary {
  std::vector<std::filesystem::path> written;
  std::size_t runs = 0;
  std::size_t simulations = 0;
};

// Collects every run and simulation output below `dir` into plot-ready tables
// in `out`. Throws DataError when nothing usable is found.
ReportSummary write_report(const std::filesystem::path& dir, const std::filesystem::path& out);

}  // namespace dspear::cli
