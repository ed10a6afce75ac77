#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace genspring::designgen {

// Square occupancy grid, row-major, values in [0,1]. Row 0 is the top base.
class DesignBitmap {
 public:
  static constexpr std::size_t kMinSide = 16;
  static constexpr std::size_t kFullSide = 150;  // full-resolution print bitmaps

  DesignBitmap() = default;
  explicit DesignBitmap(std::size_t side, double fill = 0.0);
  DesignBitmap(std::size_t side, std::vector<double> values);

  std::size_t side() const noexcept { return side_; }
  std::size_t width() const noexcept { return side_; }
  std::size_t height() const noexcept { return side_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double at(std::size_t row, std::size_t col) const { return values_[row * side_ + col]; }
  double& at(std::size_t row, std::size_t col) { return values_[row * side_ + col]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  // Values above `threshold` become 1, the rest 0.
  DesignBitmap binarized(double threshold) const;
  std::size_t count_above(double threshold) const;

  friend bool operator==(const DesignBitmap&, const DesignBitmap&) = default;

 private:
  std::size_t side_ = 0;
  std::vector<double> values_;
};

// PGM interchange: P5, maxval 255, value v stored as round(255 v).
std::string encode_pgm(const DesignBitmap& bitmap);
DesignBitmap decode_pgm(std::string_view bytes);
void write_pgm(const DesignBitmap& bitmap, const std::filesystem::path& path);
DesignBitmap read_pgm(const std::filesystem::path& path);

// Compact text form of a binary bitmap (bits above 0.5, row-major, hex
// nibbles MSB-first). Used to embed designs in JSON records.
std::string pack_bits(const DesignBitmap& bitmap);
DesignBitmap unpack_bits(std::size_t side, std::string_view hex);

}  // namespace genspring::designgen
