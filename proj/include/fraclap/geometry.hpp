#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

namespace fraclap {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Polygon = std::vector<Vec2>;

// Planar similarity x -> linear*x + translation.
struct AffineMap {
  Mat2 linear = Mat2::Identity();
  Vec2 translation = Vec2::Zero();
  double contraction_ratio = 1.0;

  static AffineMap similarity(const Mat2& linear, const Vec2& translation);
  // Homothety with ratio r fixing the point q.
  static AffineMap homothety(double r, const Vec2& q);

  Vec2 apply(const Vec2& p) const { return linear * p + translation; }
  // (*this) o other
  AffineMap compose(const AffineMap& other) const;
  AffineMap inverse() const;
  bool is_similarity(double tol = 1e-12) const;
};

struct IteratedFunctionSystem {
  std::vector<AffineMap> maps;
  std::string name;
};

struct Cell {
  Polygon polygon;        // counterclockwise
  std::vector<int> word;  // (i1,...,im): F_{i1} o ... o F_{im}(base)
};

enum class Preset {
  IntervalSquare,
  IntervalRectangle,
  Sawtooth,
  SgTriangle,
  SierpinskiCarpet,
  Carpet12_16,
  Carpet13_16,
  Octagasket,
  RandomCarpet,
  Custom,
};

struct PresetParams {
  double epsilon = 0.0;  // SG dilation / sawtooth overlap half-width
  double height = 0.1;   // sawtooth apex height
  double width = 1.0;    // interval_rectangle a
  double rect_height = 1.0;  // interval_rectangle b
};

struct CarpetSpec {
  int grid = 4;                         // j
  std::vector<int> removals_per_level;  // k_m, one per level (a single entry is broadcast)
  int levels = 1;
  std::uint64_t seed = 1;
  // Optional per-level seeds (filled in by bifurcate); empty means every level derives from seed.
  std::vector<std::uint64_t> level_seeds;

  std::uint64_t seed_for_level(int level) const;

  int removals_at(int level) const;  // level is 1-based
  void validate() const;
};

struct CellDomain {
  int level = 0;
  Polygon base;
  std::vector<Cell> cells;
  IteratedFunctionSystem ifs;
  // Similarity applied after the IFS words (identity except for the sawtooth rescale).
  AffineMap frame;
  Preset preset = Preset::Custom;
  PresetParams params;
  std::optional<CarpetSpec> carpet;

  double diameter() const;
  // Polygon recomputed from a cell word; used by the consistency checks.
  Polygon compose_word(const std::vector<int>& word) const;
};

std::string preset_name(Preset p);
Preset parse_preset(const std::string& name);

struct PresetResult {
  IteratedFunctionSystem ifs;
  Polygon base;
};

PresetResult make_preset(Preset preset, const PresetParams& params = {});
CellDomain build_domain(const IteratedFunctionSystem& ifs, const Polygon& base, int level);
// Convenience: preset + level, including the sawtooth rescale to base [0,1].
CellDomain build_preset_domain(Preset preset, const PresetParams& params, int level);

CellDomain random_carpet(const CarpetSpec& spec);
CellDomain bifurcate(const CellDomain& carpet, int restart_level, std::uint64_t seed);

struct ConnectivityReport {
  int component_count = 0;
  std::vector<Vec2> corner_coupled;
};
ConnectivityReport connectivity_report(const CellDomain& domain);

// Signed area, positive for counterclockwise polygons.
double polygon_area(const Polygon& poly);
bool point_in_convex_polygon(const Polygon& poly, const Vec2& p, double tol = 1e-12);

// splitmix64-seeded xoshiro256**.
class Xoshiro256ss {
 public:
  explicit Xoshiro256ss(std::uint64_t seed);
  std::uint64_t next();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace fraclap
