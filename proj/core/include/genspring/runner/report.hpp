#pragma once

#include <cstddef>
#include <filesystem>

namespace genspring::runner {

struct ReportFiles {
  std::filesystem::path csv;
  std::filesystem::path gallery;
  std::size_t rows = 0;
  std::size_t gallery_images = 0;
};

// Writes <out_dir>/records.csv (index, rank, raw_mse, normalized_fitness,
// feasible, origin) with fitness renormalized over the whole log, and
// <out_dir>/gallery/design_<index>.pgm for every printable design.
ReportFiles export_report(const std::filesystem::path& log, const std::filesystem::path& out_dir);

}  // namespace genspring::runner
