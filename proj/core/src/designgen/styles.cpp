#include "genspring/designgen/styles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "genspring/errors.hpp"
#include "genspring/random.hpp"

namespace genspring::designgen {

extern const char* const kEmbeddedStylesJson;

namespace {

struct Point {
  double x;
  double y;
};
using Polyline = std::vector<Point>;

constexpr std::size_t kCurveSamples = 256;

std::size_t expected_parameter_count(int style_id) {
  switch (style_id) {
    case 1: return 3;
    case 2: return 3;
    case 3: return 4;
    case 4:
    case 5: return 4;
    case 6:
    case 7: return 5;
    case 8: return 6;
    default: return 0;
  }
}

// Frame of the spring between the two base strips, in continuous pixel
// coordinates (pixel (r, c) has its center at (c + 0.5, r + 0.5)).
struct Frame {
  double side;
  double y_top;
  double y_bottom;
  double strip_x_min;
  double strip_x_max;
  double span() const { return y_bottom - y_top; }
};

Frame make_frame(std::size_t side) {
  const BaseStrips strips = base_strips(side);
  const double n = static_cast<double>(side);
  return Frame{n, static_cast<double>(strips.rows) - 0.5, n - static_cast<double>(strips.rows) + 0.5,
               static_cast<double>(strips.col_begin) + 0.5, static_cast<double>(strips.col_end) - 0.5};
}

void append_ellipse_arc(Polyline& line, Point center, double rx, double ry, double a0, double a1) {
  for (std::size_t i = 0; i <= kCurveSamples; ++i) {
    const double a = a0 + (a1 - a0) * static_cast<double>(i) / kCurveSamples;
    line.push_back({center.x + rx * std::cos(a), center.y + ry * std::sin(a)});
  }
}

Polyline single_arc(const StyleSpec& spec, const Frame& f) {
  const double radius = spec.shape[0] * f.side;
  const double cx = spec.shape[1] * f.side;
  const double dir = spec.shape[2] < 0 ? -1.0 : 1.0;
  if (!(radius > 0.0)) throw GeometryError("single-arc radius must be positive");
  if (2.0 * radius > f.span()) throw GeometryError("single-arc radius exceeds the spring height");
  const double cy = 0.5 * (f.y_top + f.y_bottom);
  Polyline line{{cx, f.y_top}};
  append_ellipse_arc(line, {cx, cy}, dir * radius, radius, -std::numbers::pi / 2, std::numbers::pi / 2);
  line.push_back({cx, f.y_bottom});
  return line;
}

Polyline zigzag(double cx, double amplitude, int periods, const Frame& f) {
  Polyline line{{cx, f.y_top}};
  const int legs = 2 * periods;
  for (int j = 0; j < legs; ++j) {
    const double y = f.y_top + (j + 0.5) * f.span() / legs;
    line.push_back({cx + (j % 2 == 0 ? amplitude : -amplitude), y});
  }
  line.push_back({cx, f.y_bottom});
  return line;
}

int checked_periods(double value) {
  const double rounded = std::round(value);
  if (rounded < 1.0) throw GeometryError("zigzag needs at least one period");
  return static_cast<int>(rounded);
}

Polyline stacked_arcs(const StyleSpec& spec, const Frame& f, int arcs, bool with_lines) {
  const double amplitude = spec.shape[0] * f.side;
  const double cx = spec.shape[1] * f.side;
  const double dir = spec.shape[2] < 0 ? -1.0 : 1.0;
  const double skew = spec.shape[3];
  const double line_fraction = with_lines ? spec.shape[4] : 0.0;
  if (!(amplitude > 0.0)) throw GeometryError("arc amplitude must be positive");
  if (!(std::abs(skew) < 1.0)) throw GeometryError("arc skew must lie in (-1, 1)");
  if (!(line_fraction >= 0.0 && line_fraction < 1.0)) {
    throw GeometryError("line fraction must lie in [0, 1)");
  }

  const double line_length = line_fraction * f.span() / (arcs + 1);
  const double arc_total = (1.0 - line_fraction) * f.span();
  std::vector<double> heights(static_cast<std::size_t>(arcs));
  double weight_sum = 0.0;
  for (int k = 0; k < arcs; ++k) {
    const double centered = 2.0 * k / (arcs - 1) - 1.0;  // -1 .. 1
    heights[static_cast<std::size_t>(k)] = 1.0 + skew * centered;
    weight_sum += heights[static_cast<std::size_t>(k)];
  }
  for (double& h : heights) h *= arc_total / weight_sum;

  Polyline line{{cx, f.y_top}};
  double y = f.y_top + line_length;
  line.push_back({cx, y});
  for (int k = 0; k < arcs; ++k) {
    const double h = heights[static_cast<std::size_t>(k)];
    const double side = (k % 2 == 0) ? dir : -dir;
    append_ellipse_arc(line, {cx, y + 0.5 * h}, side * amplitude, 0.5 * h, -std::numbers::pi / 2,
                       std::numbers::pi / 2);
    y += h + line_length;
    line.push_back({cx, y});
  }
  line.back().y = f.y_bottom;
  return line;
}

Polyline bezier(const StyleSpec& spec, const Frame& f) {
  const Point p0{spec.shape[0] * f.side, f.y_top};
  const Point p1{spec.shape[1] * f.side, spec.shape[2] * f.side};
  const Point p2{spec.shape[3] * f.side, spec.shape[4] * f.side};
  const Point p3{spec.shape[5] * f.side, f.y_bottom};
  Polyline line;
  line.reserve(kCurveSamples + 1);
  for (std::size_t i = 0; i <= kCurveSamples; ++i) {
    const double t = static_cast<double>(i) / kCurveSamples;
    const double u = 1.0 - t;
    const double b0 = u * u * u, b1 = 3 * u * u * t, b2 = 3 * u * t * t, b3 = t * t * t;
    line.push_back({b0 * p0.x + b1 * p1.x + b2 * p2.x + b3 * p3.x,
                    b0 * p0.y + b1 * p1.y + b2 * p2.y + b3 * p3.y});
  }
  return line;
}

std::vector<Polyline> build_strokes(const StyleSpec& spec, const Frame& f) {
  switch (spec.style_id) {
    case 1: return {single_arc(spec, f)};
    case 2: {
      const double amplitude = spec.shape[1] * f.side;
      if (!(amplitude > 0.0)) throw GeometryError("zigzag amplitude must be positive");
      return {zigzag(spec.shape[2] * f.side, amplitude, checked_periods(spec.shape[0]), f)};
    }
    case 3: {
      const int periods = checked_periods(spec.shape[0]);
      const double amplitude = spec.shape[1] * f.side;
      const double cx = spec.shape[2] * f.side;
      const double half_gap = 0.5 * spec.shape[3] * f.side;
      if (!(amplitude > 0.0)) throw GeometryError("zigzag amplitude must be positive");
      if (!(half_gap > 0.0)) throw GeometryError("double-zigzag separation must be positive");
      return {zigzag(cx - half_gap, -amplitude, periods, f), zigzag(cx + half_gap, amplitude, periods, f)};
    }
    case 4: return {stacked_arcs(spec, f, 2, false)};
    case 5: return {stacked_arcs(spec, f, 3, false)};
    case 6: return {stacked_arcs(spec, f, 2, true)};
    case 7: return {stacked_arcs(spec, f, 3, true)};
    case 8: return {bezier(spec, f)};
    default: throw ParameterError("unknown style id " + std::to_string(spec.style_id));
  }
}

void check_in_frame(const std::vector<Polyline>& strokes, const StyleSpec& spec, const Frame& f) {
  const double margin = 0.5 * spec.thickness;
  for (const auto& line : strokes) {
    for (const Point& p : line) {
      if (!(p.x >= margin && p.x <= f.side - margin && p.y >= 0.0 && p.y <= f.side)) {
        throw GeometryError("style " + std::to_string(spec.style_id) + " geometry leaves the frame");
      }
    }
    for (const Point& end : {line.front(), line.back()}) {
      if (end.x < f.strip_x_min || end.x > f.strip_x_max) {
        throw GeometryError("spring end does not meet the base strip");
      }
    }
  }
}

void rasterize(const Polyline& line, double radius, std::size_t side, std::span<double> pixels) {
  const double r2 = radius * radius;
  const auto n = static_cast<long>(side);
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Point a = line[i];
    const Point b = line[i + 1];
    const long c0 = std::max(0L, static_cast<long>(std::floor(std::min(a.x, b.x) - radius - 1)));
    const long c1 = std::min(n - 1, static_cast<long>(std::ceil(std::max(a.x, b.x) + radius + 1)));
    const long r0 = std::max(0L, static_cast<long>(std::floor(std::min(a.y, b.y) - radius - 1)));
    const long r1 = std::min(n - 1, static_cast<long>(std::ceil(std::max(a.y, b.y) + radius + 1)));
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    for (long r = r0; r <= r1; ++r) {
      for (long c = c0; c <= c1; ++c) {
        const double px = c + 0.5 - a.x;
        const double py = r + 0.5 - a.y;
        const double t = len2 > 0 ? std::clamp((px * dx + py * dy) / len2, 0.0, 1.0) : 0.0;
        const double ex = px - t * dx;
        const double ey = py - t * dy;
        if (ex * ex + ey * ey <= r2) pixels[static_cast<std::size_t>(r * n + c)] = 1.0;
      }
    }
  }
}

ParameterBound parse_parameter(const nlohmann::json& j) {
  ParameterBound p;
  p.name = j.at("name").get<std::string>();
  if (j.contains("values")) {
    p.values = j.at("values").get<std::vector<double>>();
    if (p.values.empty()) throw ConfigError("parameter " + p.name + " has an empty value list");
    p.min = *std::min_element(p.values.begin(), p.values.end());
    p.max = *std::max_element(p.values.begin(), p.values.end());
  } else {
    p.min = j.at("min").get<double>();
    p.max = j.at("max").get<double>();
    p.integer = j.value("integer", false);
    if (!(p.min <= p.max)) throw ConfigError("parameter " + p.name + " has min > max");
  }
  return p;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const StyleBound& StyleBounds::style(int id) const {
  for (const auto& s : styles) {
    if (s.id == id) return s;
  }
  throw ParameterError("no bounds for style id " + std::to_string(id));
}

StyleBounds StyleBounds::from_json(const std::string& text) {
  StyleBounds bounds;
  try {
    const auto j = nlohmann::json::parse(text);
    bounds.schema = j.at("schema").get<std::string>();
    const auto thickness = j.at("thickness_fraction").get<std::vector<double>>();
    if (thickness.size() != 2) throw ConfigError("thickness_fraction must be [min, max]");
    bounds.thickness_min_fraction = thickness[0];
    bounds.thickness_max_fraction = thickness[1];
    for (const auto& s : j.at("styles")) {
      StyleBound style;
      style.id = s.at("id").get<int>();
      style.name = s.at("name").get<std::string>();
      for (const auto& p : s.at("parameters")) style.parameters.push_back(parse_parameter(p));
      if (style.parameters.size() != expected_parameter_count(style.id)) {
        throw ConfigError("style " + std::to_string(style.id) + " has the wrong parameter count");
      }
      bounds.styles.push_back(std::move(style));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("style bounds: ") + e.what());
  }
  if (bounds.styles.size() != kStyleCount) throw ConfigError("style bounds must list all 8 styles");
  return bounds;
}

StyleBounds StyleBounds::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open style bounds " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

const StyleBounds& StyleBounds::defaults() {
  static const StyleBounds bounds = from_json(kEmbeddedStylesJson);
  return bounds;
}

BaseStrips base_strips(std::size_t side) {
  BaseStrips strips;
  strips.rows = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.05 * side)));
  const auto width = static_cast<std::size_t>(std::lround(0.6 * side));
  strips.col_begin = (side - width) / 2;
  strips.col_end = strips.col_begin + width;
  return strips;
}

void validate(const StyleSpec& spec) {
  if (spec.style_id < 1 || spec.style_id > kStyleCount) {
    throw ParameterError("style id must be in 1..8, got " + std::to_string(spec.style_id));
  }
  if (spec.side < DesignBitmap::kMinSide) throw ParameterError("style side below minimum bitmap size");
  if (!(spec.thickness >= 2.0)) throw ParameterError("stroke thickness must be at least 2 pixels");
  if (spec.shape.size() != expected_parameter_count(spec.style_id)) {
    throw ParameterError("style " + std::to_string(spec.style_id) + " expects " +
                         std::to_string(expected_parameter_count(spec.style_id)) + " shape parameters");
  }
  for (double v : spec.shape) {
    if (!std::isfinite(v)) throw ParameterError("non-finite style parameter");
  }
  const Frame frame = make_frame(spec.side);
  check_in_frame(build_strokes(spec, frame), spec, frame);
}

DesignBitmap generate_style(const StyleSpec& spec, std::uint64_t rng_seed) {
  validate(spec);
  Rng rng(rng_seed);
  const double phase_x = uniform(rng, -0.5, 0.5);
  const double phase_y = uniform(rng, -0.5, 0.5);

  const Frame frame = make_frame(spec.side);
  auto strokes = build_strokes(spec, frame);
  for (auto& line : strokes) {
    for (auto& p : line) {
      p.x += phase_x;
      p.y += phase_y;
    }
    // Ends stay anchored inside the strips.
    line.front().y = frame.y_top;
    line.back().y = frame.y_bottom;
  }

  DesignBitmap bitmap(spec.side, 0.0);
  const BaseStrips strips = base_strips(spec.side);
  for (std::size_t r = 0; r < strips.rows; ++r) {
    for (std::size_t c = strips.col_begin; c < strips.col_end; ++c) {
      bitmap.at(r, c) = 1.0;
      bitmap.at(spec.side - 1 - r, c) = 1.0;
    }
  }
  for (const auto& line : strokes) rasterize(line, 0.5 * spec.thickness, spec.side, bitmap.values());
  return bitmap;
}

StyleSpec sample_style_spec(int style_id, std::size_t side, std::uint64_t rng_seed,
                            const StyleBounds& bounds) {
  const StyleBound& style = bounds.style(style_id);
  Rng rng(rng_seed);
  StyleSpec spec;
  spec.style_id = style_id;
  spec.side = side;
  const double fraction = uniform(rng, bounds.thickness_min_fraction, bounds.thickness_max_fraction);
  spec.thickness = std::max(2.0, fraction * static_cast<double>(side));
  for (const auto& p : style.parameters) {
    if (!p.values.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, p.values.size() - 1);
      spec.shape.push_back(p.values[pick(rng)]);
    } else if (p.integer) {
      std::uniform_int_distribution<long> pick(std::lround(p.min), std::lround(p.max));
      spec.shape.push_back(static_cast<double>(pick(rng)));
    } else {
      spec.shape.push_back(uniform(rng, p.min, p.max));
    }
  }
  return spec;
}

std::vector<CorpusSample> sample_training_corpus(std::size_t per_style, std::uint64_t rng_seed,
                                                 std::size_t side, const StyleBounds& bounds) {
  if (per_style < 1) throw ParameterError("per_style must be at least 1");
  std::vector<CorpusSample> corpus;
  corpus.reserve(per_style * kStyleCount);
  for (int style = 1; style <= kStyleCount; ++style) {
    for (std::size_t i = 0; i < per_style; ++i) {
      CorpusSample sample;
      sample.spec = sample_style_spec(style, side, derive_seed(rng_seed, static_cast<std::uint64_t>(style), 2 * i),
                                      bounds);
      sample.seed = derive_seed(rng_seed, static_cast<std::uint64_t>(style), 2 * i + 1);
      sample.bitmap = generate_style(sample.spec, sample.seed);
      corpus.push_back(std::move(sample));
    }
  }
  return corpus;
}

void write_corpus(const std::vector<CorpusSample>& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.csv");
  if (!manifest) throw ParameterError("cannot write corpus manifest in " + dir.string());
  manifest << "style_id,seed,parameters,path\n";
  std::vector<std::size_t> counters(kStyleCount + 1, 0);
  for (const auto& sample : corpus) {
    const std::string name = "style" + std::to_string(sample.spec.style_id) + "_" +
                             std::to_string(counters[static_cast<std::size_t>(sample.spec.style_id)]++) +
                             ".pgm";
    write_pgm(sample.bitmap, dir / name);
    manifest << sample.spec.style_id << ',' << sample.seed << ',' << format_double(sample.spec.thickness);
    for (double v : sample.spec.shape) manifest << ' ' << format_double(v);
    manifest << ',' << name << '\n';
  }
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw ParameterError("cannot open corpus manifest " + manifest.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  std::getline(in, line);
  if (line != "style_id,seed,parameters,path") throw ParameterError("unexpected manifest header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string style, seed, params, path;
    if (!std::getline(row, style, ',') || !std::getline(row, seed, ',') || !std::getline(row, params, ',') ||
        !std::getline(row, path)) {
      throw ParameterError("malformed manifest row: " + line);
    }
    ManifestEntry entry;
    entry.style_id = std::stoi(style);
    entry.seed = std::stoull(seed);
    std::stringstream values(params);
    for (double v; values >> v;) entry.parameters.push_back(v);
    entry.path = manifest.parent_path() / path;
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace genspring::designgen
