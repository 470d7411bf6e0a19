#pragma once

#include <cstdint>

#include "zippy/types.hpp"

namespace zippy {

/// Ground model. All variants are piecewise-flat height fields; normals are
/// world-up on every cell top (edges are resolved by the event logic of the
/// simulator, not by tilted normals).
class Terrain {
public:
  enum class Kind { Flat, Staircase, PrismField };

  /// Flat ground at z = 0.
  static Terrain flat();

  /// Steps of the given rise starting at x = 0 and repeating every `depth`
  /// meters in +x; `rise` > 0 ascends, < 0 descends. Ground is level at
  /// z = 0 for x < 0, and level again beyond `count` steps.
  static Terrain staircase(double rise, double depth, int count);

  /// Square prisms of side `cell_side` tiling the rectangle
  /// [0, extent_x] x [-extent_y/2, extent_y/2]. Heights are independent
  /// normal draws N(mean_height, std_height^2) clipped to [0, max_height],
  /// generated from `seed` by a counter-based generator: equal seeds give
  /// bitwise-identical fields on every platform. Outside the rectangle the
  /// ground is a flat apron at mean_height, so the field has no cliffs at
  /// its boundary.
  static Terrain prism_field(double cell_side, double mean_height, double std_height,
                             double max_height, std::uint64_t seed, double extent_x,
                             double extent_y);

  double height(double x, double y) const;
  Vec3 normal(double /*x*/, double /*y*/) const { return world_up(); }

  Kind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  double cell_side() const { return cell_side_; }
  double extent_x() const { return extent_x_; }
  double mean_height() const { return mean_height_; }

private:
  Terrain() = default;

  Kind kind_ = Kind::Flat;
  // staircase
  double rise_ = 0.0;
  double depth_ = 0.0;
  int count_ = 0;
  // prism field
  double cell_side_ = 0.0;
  double mean_height_ = 0.0;
  double std_height_ = 0.0;
  double max_height_ = 0.0;
  std::uint64_t seed_ = 0;
  double extent_x_ = 0.0;
  double extent_y_ = 0.0;
};

/// Prism-field defaults matching the rough-terrain testbed: 5.3 mm cells,
/// 16 mm mean, 2.5 mm standard deviation, 32 mm ceiling.
struct PrismFieldDefaults {
  double cell_side = 0.0053;
  double mean_height = 0.016;
  double std_height = 0.0025;
  double max_height = 0.032;
  double extent_x = 0.20;
  double extent_y = 0.20;
};

}  // namespace zippy
