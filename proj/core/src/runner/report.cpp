#include "genspring/runner/report.hpp"

#include <cstdio>
#include <fstream>
#include <string>

#include "genspring/designgen/bitmap.hpp"
#include "genspring/errors.hpp"
#include "genspring/runner/runlog.hpp"

namespace genspring::runner {

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string padded(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return buf;
}

}  // namespace

ReportFiles export_report(const std::filesystem::path& log, const std::filesystem::path& out_dir) {
  const RunLogContents contents = read_runlog(log);
  ReportFiles files;
  files.csv = out_dir / "records.csv";
  files.gallery = out_dir / "gallery";
  std::filesystem::create_directories(files.gallery);

  std::ofstream csv(files.csv);
  if (!csv) throw StateError("cannot write " + files.csv.string());
  csv << "index,rank,raw_mse,normalized_fitness,feasible,origin\n";
  for (const auto& r : contents.records) {
    csv << r.design_id << ',' << fitness::to_int(r.rank) << ',' << (r.raw_mse ? number(*r.raw_mse) : "") << ','
        << number(r.normalized_fitness) << ',' << (r.feasible() ? 1 : 0) << ',' << r.origin << '\n';
    ++files.rows;
    const bool printable = r.printability && r.printability->connected;
    if (printable && r.bitmap_side > 0) {
      designgen::write_pgm(designgen::unpack_bits(r.bitmap_side, r.bitmap_bits),
                           files.gallery / ("design_" + padded(r.design_id) + ".pgm"));
      ++files.gallery_images;
    }
  }
  if (!csv) throw StateError("failed writing " + files.csv.string());
  return files;
}

}  // namespace genspring::runner
