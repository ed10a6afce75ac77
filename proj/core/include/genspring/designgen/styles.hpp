#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "genspring/designgen/bitmap.hpp"

namespace genspring::designgen {

inline constexpr int kStyleCount = 8;
inline constexpr std::size_t kDeskSide = 32;

// One spring geometry. `shape` is ordered as the style's parameter list in
// the bounds config (fractions of the side length unless the parameter is
// an integer count or a +/-1 direction).
struct StyleSpec {
  int style_id = 1;
  std::size_t side = kDeskSide;
  double thickness = 2.0;  // stroke width in pixels
  std::vector<double> shape;
};

struct ParameterBound {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  bool integer = false;
  std::vector<double> values;  // non-empty: discrete choice
};

struct StyleBound {
  int id = 0;
  std::string name;
  std::vector<ParameterBound> parameters;
};

struct StyleBounds {
  std::string schema;
  double thickness_min_fraction = 0.0;
  double thickness_max_fraction = 0.0;
  std::vector<StyleBound> styles;

  const StyleBound& style(int id) const;

  // The bounds shipped with the library (data/styles.json, embedded).
  static const StyleBounds& defaults();
  static StyleBounds from_json(const std::string& text);
  static StyleBounds load(const std::filesystem::path& path);
};

// Rows occupied by each base strip and the strip's column range [begin, end).
struct BaseStrips {
  std::size_t rows = 0;
  std::size_t col_begin = 0;
  std::size_t col_end = 0;
};
BaseStrips base_strips(std::size_t side);

// Throws ParameterError for an invalid style id / thickness / parameter count
// and GeometryError for degenerate or out-of-frame shapes.
void validate(const StyleSpec& spec);

// Rasterizes a spring: binary bitmap with both base strips. The seed picks a
// sub-pixel raster phase, so equal (spec, seed) give identical pixels.
DesignBitmap generate_style(const StyleSpec& spec, std::uint64_t rng_seed);

// Draws shape parameters uniformly within the style's bounds.
StyleSpec sample_style_spec(int style_id, std::size_t side, std::uint64_t rng_seed,
                            const StyleBounds& bounds = StyleBounds::defaults());

struct CorpusSample {
  StyleSpec spec;
  std::uint64_t seed = 0;  // raster seed passed to generate_style
  DesignBitmap bitmap;
};

// per_style samples of each of the eight styles, ordered by style then index.
std::vector<CorpusSample> sample_training_corpus(std::size_t per_style, std::uint64_t rng_seed,
                                                 std::size_t side = kDeskSide,
                                                 const StyleBounds& bounds = StyleBounds::defaults());

// Writes <dir>/style<k>_<index>.pgm for every sample plus <dir>/manifest.csv.
void write_corpus(const std::vector<CorpusSample>& corpus, const std::filesystem::path& dir);

struct ManifestEntry {
  int style_id = 0;
  std::uint64_t seed = 0;
  std::vector<double> parameters;  // thickness first, then shape
  std::filesystem::path path;
};
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);

}  // namespace genspring::designgen
