#pragma once

#include "genspring/designgen/bitmap.hpp"

namespace genspring::designgen {

inline constexpr double kDefaultThreshold = 0.5;

struct PrintabilityReport {
  bool visible = false;    // some pixel exceeds the threshold
  bool connected = false;  // a 4-connected component spans top row to bottom row
  DesignBitmap filtered;   // binary; only pixels of spanning components survive
};

// Keeps the above-threshold pixels whose 4-connected component touches both
// the first and the last row. threshold must lie in (0,1).
PrintabilityReport filter_connected(const DesignBitmap& bitmap, double threshold = kDefaultThreshold);

}  // namespace genspring::designgen
