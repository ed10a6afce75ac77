#include "genspring/designgen/printability.hpp"

#include <cstdint>
#include <vector>

#include "genspring/errors.hpp"

namespace genspring::designgen {

PrintabilityReport filter_connected(const DesignBitmap& bitmap, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ParameterError("connectivity threshold must lie in (0,1)");
  }
  const std::size_t n = bitmap.side();
  const auto values = bitmap.values();

  PrintabilityReport report;
  report.filtered = DesignBitmap(n, 0.0);

  std::vector<std::int32_t> label(values.size(), -1);
  std::vector<std::size_t> stack;
  std::vector<std::size_t> members;
  std::int32_t next_label = 0;

  for (std::size_t seed = 0; seed < values.size(); ++seed) {
    if (values[seed] <= threshold || label[seed] >= 0) continue;
    report.visible = true;

    bool touches_top = false;
    bool touches_bottom = false;
    members.clear();
    stack.assign(1, seed);
    label[seed] = next_label;
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      members.push_back(idx);
      const std::size_t row = idx / n;
      const std::size_t col = idx % n;
      touches_top |= row == 0;
      touches_bottom |= row == n - 1;
      auto visit = [&](std::size_t nb) {
        if (values[nb] > threshold && label[nb] < 0) {
          label[nb] = next_label;
          stack.push_back(nb);
        }
      };
      if (row > 0) visit(idx - n);
      if (row + 1 < n) visit(idx + n);
      if (col > 0) visit(idx - 1);
      if (col + 1 < n) visit(idx + 1);
    }
    if (touches_top && touches_bottom) {
      report.connected = true;
      auto out = report.filtered.values();
      for (std::size_t idx : members) out[idx] = 1.0;
    }
    ++next_label;
  }
  return report;
}

}  // namespace genspring::designgen
