#include "genspring/designgen/bitmap.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "genspring/errors.hpp"

namespace genspring::designgen {

namespace {

void check_side(std::size_t side) {
  if (side < DesignBitmap::kMinSide) {
    throw ParameterError("bitmap side " + std::to_string(side) + " is below the minimum of " +
                         std::to_string(DesignBitmap::kMinSide));
  }
}

}  // namespace

DesignBitmap::DesignBitmap(std::size_t side, double fill) : side_(side), values_(side * side, fill) {
  check_side(side);
  if (!(fill >= 0.0 && fill <= 1.0)) throw ParameterError("bitmap fill value outside [0,1]");
}

DesignBitmap::DesignBitmap(std::size_t side, std::vector<double> values)
    : side_(side), values_(std::move(values)) {
  check_side(side);
  if (values_.size() != side * side) {
    throw ParameterError("bitmap value count " + std::to_string(values_.size()) +
                         " does not match side^2 = " + std::to_string(side * side));
  }
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("bitmap value outside [0,1]");
  }
}

DesignBitmap DesignBitmap::binarized(double threshold) const {
  DesignBitmap out = *this;
  for (double& v : out.values_) v = v > threshold ? 1.0 : 0.0;
  return out;
}

std::size_t DesignBitmap::count_above(double threshold) const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [threshold](double v) { return v > threshold; }));
}

std::string encode_pgm(const DesignBitmap& bitmap) {
  std::string out = "P5\n" + std::to_string(bitmap.width()) + " " + std::to_string(bitmap.height()) +
                    "\n255\n";
  out.reserve(out.size() + bitmap.size());
  for (double v : bitmap.values()) {
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
  }
  return out;
}

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string_view next_token(std::string_view bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  return bytes.substr(start, pos - start);
}

std::size_t parse_size(std::string_view token, const char* what) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw ParameterError(std::string("malformed PGM ") + what);
  }
  return value;
}

}  // namespace

DesignBitmap decode_pgm(std::string_view bytes) {
  std::size_t pos = 0;
  if (next_token(bytes, pos) != "P5") throw ParameterError("not a binary PGM (P5) file");
  const std::size_t width = parse_size(next_token(bytes, pos), "width");
  const std::size_t height = parse_size(next_token(bytes, pos), "height");
  const std::size_t maxval = parse_size(next_token(bytes, pos), "maxval");
  if (width != height) throw ParameterError("PGM bitmap is not square");
  if (maxval == 0 || maxval > 255) throw ParameterError("PGM maxval must be in 1..255");
  ++pos;  // single whitespace byte after maxval
  if (bytes.size() < pos + width * height) throw ParameterError("truncated PGM pixel data");
  std::vector<double> values(width * height);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<unsigned char>(bytes[pos + i]) / static_cast<double>(maxval);
  }
  return DesignBitmap(width, std::move(values));
}

void write_pgm(const DesignBitmap& bitmap, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_pgm(bitmap);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

DesignBitmap read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_pgm(bytes);
}

std::string pack_bits(const DesignBitmap& bitmap) {
  static constexpr char kHex[] = "0123456789abcdef";
  const auto values = bitmap.values();
  std::string out((values.size() + 3) / 4, '0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > 0.5) {
      const auto nibble = static_cast<std::size_t>(std::string_view(kHex).find(out[i / 4]));
      out[i / 4] = kHex[nibble | (8u >> (i % 4))];
    }
  }
  return out;
}

DesignBitmap unpack_bits(std::size_t side, std::string_view hex) {
  const std::size_t n = side * side;
  if (hex.size() != (n + 3) / 4) throw ParameterError("packed bitmap length mismatch");
  std::vector<double> values(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const char c = hex[i / 4];
    unsigned nibble = 0;
    if (c >= '0' && c <= '9') {
      nibble = static_cast<unsigned>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      nibble = static_cast<unsigned>(c - 'a' + 10);
    } else {
      throw ParameterError("packed bitmap contains a non-hex character");
    }
    values[i] = (nibble & (8u >> (i % 4))) ? 1.0 : 0.0;
  }
  return DesignBitmap(side, std::move(values));
}

}  // namespace genspring::designgen
