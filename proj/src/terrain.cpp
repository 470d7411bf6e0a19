#include "zippy/terrain.hpp"

#include <cmath>

namespace zippy {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double to_unit_interval(std::uint64_t bits) {
  // 53 high bits -> (0, 1]; never returns 0 so it is safe inside log().
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

// Counter-based standard normal draw: Box-Muller on two splitmix64 streams.
// Avoids std::normal_distribution, whose output is implementation-defined.
double cell_normal(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  const std::uint64_t key = splitmix64(
      seed ^ splitmix64(static_cast<std::uint64_t>(ix) ^ splitmix64(static_cast<std::uint64_t>(iy))));
  const double u1 = to_unit_interval(key);
  const double u2 = to_unit_interval(splitmix64(key));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

Terrain Terrain::flat() { return Terrain(); }

Terrain Terrain::staircase(double rise, double depth, int count) {
  if (depth <= 0.0 || count < 1) {
    throw ValidationError("staircase: depth must be positive and count at least 1");
  }
  Terrain t;
  t.kind_ = Kind::Staircase;
  t.rise_ = rise;
  t.depth_ = depth;
  t.count_ = count;
  return t;
}

Terrain Terrain::prism_field(double cell_side, double mean_height, double std_height,
                             double max_height, std::uint64_t seed, double extent_x,
                             double extent_y) {
  if (cell_side <= 0.0 || extent_x <= 0.0 || extent_y <= 0.0) {
    throw ValidationError("prism_field: cell_side and extents must be positive");
  }
  if (std_height < 0.0 || max_height < 0.0 || mean_height < 0.0) {
    throw ValidationError("prism_field: heights must be non-negative");
  }
  Terrain t;
  t.kind_ = Kind::PrismField;
  t.cell_side_ = cell_side;
  t.mean_height_ = mean_height;
  t.std_height_ = std_height;
  t.max_height_ = max_height;
  t.seed_ = seed;
  t.extent_x_ = extent_x;
  t.extent_y_ = extent_y;
  return t;
}

double Terrain::height(double x, double y) const {
  switch (kind_) {
    case Kind::Flat:
      return 0.0;
    case Kind::Staircase: {
      if (x < 0.0) return 0.0;
      const double step = std::min(std::floor(x / depth_), static_cast<double>(count_));
      return rise_ * step;
    }
    case Kind::PrismField: {
      if (x < 0.0 || x > extent_x_ || y < -0.5 * extent_y_ || y > 0.5 * extent_y_) {
        return mean_height_;
      }
      const auto ix = static_cast<std::int64_t>(std::floor(x / cell_side_));
      const auto iy = static_cast<std::int64_t>(std::floor(y / cell_side_));
      const double h = mean_height_ + std_height_ * cell_normal(seed_, ix, iy);
      return std::min(std::max(h, 0.0), max_height_);
    }
  }
  return 0.0;
}

}  // namespace zippy
