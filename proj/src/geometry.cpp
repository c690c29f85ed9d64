#include "fraclap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "fraclap/error.hpp"
#include "fraclap/point_index.hpp"

namespace fraclap {

namespace {

constexpr double kPi = 3.14159265358979323846;

Polygon transform(const AffineMap& f, const Polygon& poly) {
  Polygon out;
  out.reserve(poly.size());
  for (const auto& p : poly) out.push_back(f.apply(p));
  if (f.linear.determinant() < 0) std::reverse(out.begin(), out.end());
  return out;
}

Polygon square(double x0, double y0, double s) {
  return {Vec2(x0, y0), Vec2(x0 + s, y0), Vec2(x0 + s, y0 + s), Vec2(x0, y0 + s)};
}

// j x j grid of ratio-1/j maps, omitting the listed (col,row) positions.
IteratedFunctionSystem grid_ifs(int j, const std::set<std::pair<int, int>>& omit, const std::string& name) {
  IteratedFunctionSystem ifs;
  ifs.name = name;
  const double r = 1.0 / j;
  for (int row = 0; row < j; ++row) {
    for (int col = 0; col < j; ++col) {
      if (omit.count({col, row})) continue;
      ifs.maps.push_back(AffineMap::similarity(r * Mat2::Identity(), Vec2(col * r, row * r)));
    }
  }
  return ifs;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

AffineMap AffineMap::similarity(const Mat2& linear, const Vec2& translation) {
  AffineMap f;
  f.linear = linear;
  f.translation = translation;
  f.contraction_ratio = std::sqrt(std::abs(linear.determinant()));
  return f;
}

AffineMap AffineMap::homothety(double r, const Vec2& q) {
  return similarity(r * Mat2::Identity(), (1.0 - r) * q);
}

AffineMap AffineMap::compose(const AffineMap& other) const {
  AffineMap f;
  f.linear = linear * other.linear;
  f.translation = linear * other.translation + translation;
  f.contraction_ratio = contraction_ratio * other.contraction_ratio;
  return f;
}

AffineMap AffineMap::inverse() const {
  AffineMap f;
  f.linear = linear.inverse();
  f.translation = -(f.linear * translation);
  f.contraction_ratio = 1.0 / contraction_ratio;
  return f;
}

bool AffineMap::is_similarity(double tol) const {
  const Mat2 g = linear.transpose() * linear;
  const double r2 = contraction_ratio * contraction_ratio;
  return (g - r2 * Mat2::Identity()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, r2);
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Xoshiro256ss::Xoshiro256ss(std::uint64_t seed) {
  std::uint64_t st = seed;
  for (auto& s : s_) s = splitmix64(st);
}

std::uint64_t Xoshiro256ss::next() {
  auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

std::uint64_t Xoshiro256ss::below(std::uint64_t n) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % n;
}

double polygon_area(const Polygon& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

bool point_in_convex_polygon(const Polygon& poly, const Vec2& p, double tol) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 e = poly[(i + 1) % poly.size()] - poly[i];
    const Vec2 d = p - poly[i];
    if (e.x() * d.y() - e.y() * d.x() < -tol * e.norm()) return false;
  }
  return true;
}

std::string preset_name(Preset p) {
  switch (p) {
    case Preset::IntervalSquare: return "interval_square";
    case Preset::IntervalRectangle: return "interval_rectangle";
    case Preset::Sawtooth: return "sawtooth";
    case Preset::SgTriangle: return "sg_triangle";
    case Preset::SierpinskiCarpet: return "sierpinski_carpet";
    case Preset::Carpet12_16: return "carpet_12_16";
    case Preset::Carpet13_16: return "carpet_13_16";
    case Preset::Octagasket: return "octagasket";
    case Preset::RandomCarpet: return "random_carpet";
    case Preset::Custom: return "custom";
  }
  return "custom";
}

Preset parse_preset(const std::string& name) {
  static const std::map<std::string, Preset> table = {
      {"interval_square", Preset::IntervalSquare},
      {"interval", Preset::IntervalSquare},
      {"interval_rectangle", Preset::IntervalRectangle},
      {"rectangle", Preset::IntervalRectangle},
      {"sawtooth", Preset::Sawtooth},
      {"sg_triangle", Preset::SgTriangle},
      {"sg", Preset::SgTriangle},
      {"sierpinski_carpet", Preset::SierpinskiCarpet},
      {"sc", Preset::SierpinskiCarpet},
      {"carpet_12_16", Preset::Carpet12_16},
      {"12_16", Preset::Carpet12_16},
      {"carpet_13_16", Preset::Carpet13_16},
      {"13_16", Preset::Carpet13_16},
      {"octagasket", Preset::Octagasket},
  };
  auto it = table.find(name);
  if (it == table.end()) throw InvalidInput("unknown preset: " + name);
  return it->second;
}

PresetResult make_preset(Preset preset, const PresetParams& params) {
  PresetResult out;
  out.ifs.name = preset_name(preset);
  switch (preset) {
    case Preset::IntervalSquare:
    case Preset::IntervalRectangle: {
      const double a = preset == Preset::IntervalSquare ? 1.0 : params.width;
      const double b = preset == Preset::IntervalSquare ? 1.0 : params.rect_height;
      if (!(a > 0) || !(b > 0)) throw InvalidInput("rectangle dimensions must be positive");
      out.ifs.maps.push_back(AffineMap::similarity(0.5 * Mat2::Identity(), Vec2(0, 0)));
      out.ifs.maps.push_back(AffineMap::similarity(0.5 * Mat2::Identity(), Vec2(0.5 * a, 0)));
      out.base = {Vec2(0, 0), Vec2(a, 0), Vec2(a, b), Vec2(0, b)};
      break;
    }
    case Preset::Sawtooth: {
      if (!(params.epsilon > 0)) throw InvalidInput("sawtooth epsilon must be positive");
      if (!(params.height > 0)) throw InvalidInput("sawtooth height must be positive");
      out.ifs.maps.push_back(AffineMap::similarity(0.5 * Mat2::Identity(), Vec2(0, 0)));
      out.ifs.maps.push_back(AffineMap::similarity(0.5 * Mat2::Identity(), Vec2(0.5, 0)));
      out.base = {Vec2(-params.epsilon, 0), Vec2(1 + params.epsilon, 0), Vec2(0.5, params.height)};
      break;
    }
    case Preset::SgTriangle: {
      if (params.epsilon < 0 || !std::isfinite(params.epsilon)) throw InvalidInput("SG epsilon must be >= 0");
      const Vec2 q[3] = {Vec2(0, 0), Vec2(1, 0), Vec2(0.5, std::sqrt(3.0) / 2)};
      for (const auto& qi : q) out.ifs.maps.push_back(AffineMap::homothety(0.5, qi));
      const Vec2 c = (q[0] + q[1] + q[2]) / 3.0;
      for (const auto& qi : q) out.base.push_back(c + (1.0 + params.epsilon) * (qi - c));
      break;
    }
    case Preset::SierpinskiCarpet:
      out.ifs = grid_ifs(3, {{1, 1}}, "sierpinski_carpet");
      out.base = square(0, 0, 1);
      break;
    case Preset::Carpet12_16:
      out.ifs = grid_ifs(4, {{1, 1}, {2, 1}, {1, 2}, {2, 2}}, "carpet_12_16");
      out.base = square(0, 0, 1);
      break;
    case Preset::Carpet13_16:
      out.ifs = grid_ifs(4, {{1, 1}, {2, 1}, {1, 2}}, "carpet_13_16");
      out.base = square(0, 0, 1);
      break;
    case Preset::Octagasket: {
      const double rho = 1.0 - std::sqrt(2.0) / 2.0;
      for (int k = 0; k < 8; ++k) {
        const Vec2 q(std::cos(k * kPi / 4), std::sin(k * kPi / 4));
        out.ifs.maps.push_back(AffineMap::homothety(rho, q));
        out.base.push_back(q);
      }
      break;
    }
    default:
      throw InvalidInput("preset has no fixed IFS: " + preset_name(preset));
  }
  return out;
}

CellDomain build_domain(const IteratedFunctionSystem& ifs, const Polygon& base, int level) {
  if (level < 0) throw InvalidInput("level must be >= 0");
  if (ifs.maps.empty()) throw InvalidInput("IFS must be nonempty");
  for (const auto& f : ifs.maps) {
    if (!(f.contraction_ratio < 1.0)) throw InvalidInput("IFS map is not contractive");
  }
  if (base.size() < 3) throw InvalidInput("base polygon needs at least 3 vertices");
  CellDomain d;
  d.level = level;
  d.base = base;
  d.ifs = ifs;
  d.cells.push_back(Cell{base, {}});
  for (int m = 1; m <= level; ++m) {
    std::vector<Cell> next;
    next.reserve(d.cells.size() * ifs.maps.size());
    for (std::size_t i = 0; i < ifs.maps.size(); ++i) {
      for (const auto& c : d.cells) {
        Cell nc;
        nc.polygon = transform(ifs.maps[i], c.polygon);
        nc.word.reserve(c.word.size() + 1);
        nc.word.push_back(static_cast<int>(i));
        nc.word.insert(nc.word.end(), c.word.begin(), c.word.end());
        next.push_back(std::move(nc));
      }
    }
    d.cells = std::move(next);
  }
  return d;
}

CellDomain build_preset_domain(Preset preset, const PresetParams& params, int level) {
  const PresetResult pr = make_preset(preset, params);
  CellDomain d = build_domain(pr.ifs, pr.base, level);
  d.preset = preset;
  d.params = params;
  if (preset == Preset::Sawtooth) {
    // Map the base segment [-e, 1+e], e = eps 2^-m, onto [0,1].
    const double e = params.epsilon * std::ldexp(1.0, -level);
    const double s = 1.0 / (1.0 + 2.0 * e);
    d.frame = AffineMap::similarity(s * Mat2::Identity(), Vec2(e * s, 0.0));
    for (auto& c : d.cells) c.polygon = transform(d.frame, c.polygon);
  }
  return d;
}

double CellDomain::diameter() const {
  Vec2 lo = Vec2::Constant(1e300), hi = Vec2::Constant(-1e300);
  auto grow = [&](const Polygon& poly) {
    for (const auto& p : poly) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  };
  if (cells.empty()) grow(base);
  for (const auto& c : cells) grow(c.polygon);
  return (hi - lo).norm();
}

Polygon CellDomain::compose_word(const std::vector<int>& word) const {
  AffineMap f = frame;
  for (int i : word) {
    if (i < 0 || i >= static_cast<int>(ifs.maps.size())) throw InvalidInput("word letter out of range");
    f = f.compose(ifs.maps[i]);
  }
  return transform(f, base);
}

// ---------------------------------------------------------------------------
// Random carpets

int CarpetSpec::removals_at(int level) const {
  if (removals_per_level.empty()) return 0;
  if (removals_per_level.size() == 1) return removals_per_level[0];
  return removals_per_level.at(level - 1);
}

std::uint64_t CarpetSpec::seed_for_level(int level) const {
  if (!level_seeds.empty()) return level_seeds.at(level - 1);
  std::uint64_t st = seed ^ (0xD1B54A32D192ED03ULL * static_cast<std::uint64_t>(level));
  return splitmix64(st);
}

void CarpetSpec::validate() const {
  if (grid < 2) throw InvalidInput("carpet grid j must be >= 2");
  if (levels < 0) throw InvalidInput("carpet levels must be >= 0");
  if (removals_per_level.size() > 1 && static_cast<int>(removals_per_level.size()) != levels) {
    throw InvalidInput("removals_per_level must have one entry or one per level");
  }
  for (int k : removals_per_level) {
    if (k < 0 || k >= grid * grid - 1) throw InvalidInput("each k must satisfy 0 <= k < j^2 - 1");
  }
  if (!level_seeds.empty() && static_cast<int>(level_seeds.size()) != levels) {
    throw InvalidInput("level_seeds must have one entry per level");
  }
  double cells = std::pow(static_cast<double>(grid * grid), levels);
  if (cells > 5e7) throw InvalidInput("carpet too large");
}

namespace {

struct GridCell {
  long x = 0, y = 0;
  std::vector<int> word;
};

// Occupancy grid with the corner-coupling predicate.
class Occupancy {
 public:
  explicit Occupancy(long n) : n_(n), occ_(static_cast<std::size_t>(n * n), 0) {}
  bool at(long x, long y) const {
    if (x < 0 || y < 0 || x >= n_ || y >= n_) return false;
    return occ_[static_cast<std::size_t>(y * n_ + x)] != 0;
  }
  void set(long x, long y, bool v) { occ_[static_cast<std::size_t>(y * n_ + x)] = v ? 1 : 0; }
  // Grid vertex (a,b) touches exactly two diagonal squares.
  bool coupled(long a, long b) const {
    const bool sw = at(a - 1, b - 1), se = at(a, b - 1), nw = at(a - 1, b), ne = at(a, b);
    const int count = sw + se + nw + ne;
    return count == 2 && ((sw && ne) || (se && nw));
  }
  long n() const { return n_; }

 private:
  long n_;
  std::vector<std::uint8_t> occ_;
};

int grid_components(const std::vector<GridCell>& cells, long n) {
  std::vector<int> id(static_cast<std::size_t>(n * n), -1);
  for (std::size_t i = 0; i < cells.size(); ++i) id[static_cast<std::size_t>(cells[i].y * n + cells[i].x)] = static_cast<int>(i);
  UnionFind uf(static_cast<int>(cells.size()));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const long x = cells[i].x, y = cells[i].y;
    if (x + 1 < n) {
      const int r = id[static_cast<std::size_t>(y * n + x + 1)];
      if (r >= 0) uf.unite(static_cast<int>(i), r);
    }
    if (y + 1 < n) {
      const int u = id[static_cast<std::size_t>((y + 1) * n + x)];
      if (u >= 0) uf.unite(static_cast<int>(i), u);
    }
  }
  std::set<int> roots;
  for (std::size_t i = 0; i < cells.size(); ++i) roots.insert(uf.find(static_cast<int>(i)));
  return static_cast<int>(roots.size());
}

constexpr int kLevelRetries = 1000;
constexpr int kParentRetries = 10000;

// One subdivision step: every parent square is split j x j and k children are removed.
std::vector<GridCell> subdivide_level(const std::vector<GridCell>& parents, int j, int k, long n_child,
                                      Xoshiro256ss& rng) {
  const int jj = j * j;
  for (int attempt = 0; attempt < kLevelRetries; ++attempt) {
    Occupancy occ(n_child);
    for (const auto& p : parents) {
      for (int c = 0; c < jj; ++c) occ.set(p.x * j + c % j, p.y * j + c / j, true);
    }
    std::vector<std::vector<int>> removed(parents.size());
    bool level_ok = true;
    for (std::size_t pi = 0; pi < parents.size() && level_ok; ++pi) {
      const long x0 = parents[pi].x * j, y0 = parents[pi].y * j;
      bool ok = false;
      std::vector<int> pool(jj);
      for (int tries = 0; tries < kParentRetries && !ok; ++tries) {
        std::iota(pool.begin(), pool.end(), 0);
        for (int t = 0; t < k; ++t) {
          const int pick = t + static_cast<int>(rng.below(static_cast<std::uint64_t>(jj - t)));
          std::swap(pool[t], pool[pick]);
        }
        for (int t = 0; t < k; ++t) occ.set(x0 + pool[t] % j, y0 + pool[t] / j, false);
        ok = true;
        for (long a = x0; a <= x0 + j && ok; ++a) {
          for (long b = y0; b <= y0 + j && ok; ++b) {
            if (occ.coupled(a, b)) ok = false;
          }
        }
        if (!ok) {
          for (int t = 0; t < k; ++t) occ.set(x0 + pool[t] % j, y0 + pool[t] / j, true);
        } else {
          removed[pi].assign(pool.begin(), pool.begin() + k);
        }
      }
      if (!ok) level_ok = false;
    }
    if (!level_ok) continue;
    std::vector<GridCell> children;
    children.reserve(parents.size() * static_cast<std::size_t>(jj - k));
    for (std::size_t pi = 0; pi < parents.size(); ++pi) {
      for (int c = 0; c < jj; ++c) {
        if (std::find(removed[pi].begin(), removed[pi].end(), c) != removed[pi].end()) continue;
        GridCell g;
        g.x = parents[pi].x * j + c % j;
        g.y = parents[pi].y * j + c / j;
        g.word = parents[pi].word;
        g.word.push_back(c);
        children.push_back(std::move(g));
      }
    }
    if (grid_components(children, n_child) == 1) return children;
  }
  throw InvalidInput("random carpet: retry budget exhausted (k too large for a connected carpet)");
}

CellDomain grow_carpet(const CarpetSpec& spec, std::vector<GridCell> cells, int from_level) {
  const int j = spec.grid;
  long n = 1;
  for (int l = 1; l < from_level; ++l) n *= j;
  for (int level = from_level; level <= spec.levels; ++level) {
    n *= j;
    Xoshiro256ss rng(spec.seed_for_level(level));
    cells = subdivide_level(cells, j, spec.removals_at(level), n, rng);
  }
  CellDomain d;
  d.level = spec.levels;
  d.base = square(0, 0, 1);
  d.ifs = grid_ifs(j, {}, "random_carpet");
  d.preset = Preset::RandomCarpet;
  d.carpet = spec;
  const double s = 1.0 / static_cast<double>(n);
  d.cells.reserve(cells.size());
  for (auto& g : cells) d.cells.push_back(Cell{square(g.x * s, g.y * s, s), std::move(g.word)});
  return d;
}

}  // namespace

CellDomain random_carpet(const CarpetSpec& spec) {
  spec.validate();
  return grow_carpet(spec, {GridCell{0, 0, {}}}, 1);
}

CellDomain bifurcate(const CellDomain& carpet, int restart_level, std::uint64_t seed) {
  if (!carpet.carpet) throw InvalidInput("bifurcate requires a random carpet");
  if (restart_level < 1 || restart_level > carpet.level) throw InvalidInput("restart_level out of range");
  CarpetSpec spec = *carpet.carpet;
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(spec.levels));
  for (int l = 1; l <= spec.levels; ++l) seeds[l - 1] = spec.seed_for_level(l);
  CarpetSpec fresh = spec;
  fresh.seed = seed;
  fresh.level_seeds.clear();
  for (int l = restart_level; l <= spec.levels; ++l) seeds[l - 1] = fresh.seed_for_level(l);
  spec.level_seeds = seeds;

  // Retain the level restart_level-1 squares, i.e. the distinct word prefixes.
  const int depth = restart_level - 1;
  std::set<std::vector<int>> prefixes;
  for (const auto& c : carpet.cells) prefixes.insert(std::vector<int>(c.word.begin(), c.word.begin() + depth));
  std::vector<GridCell> parents;
  for (const auto& w : prefixes) {
    GridCell g;
    for (int letter : w) {
      g.x = g.x * spec.grid + letter % spec.grid;
      g.y = g.y * spec.grid + letter / spec.grid;
    }
    g.word = w;
    parents.push_back(std::move(g));
  }
  return grow_carpet(spec, std::move(parents), restart_level);
}

ConnectivityReport connectivity_report(const CellDomain& domain) {
  ConnectivityReport rep;
  const std::size_t nc = domain.cells.size();
  if (nc == 0) return rep;
  PointIndex index(1e-9 * std::max(domain.diameter(), 1e-300));
  std::vector<std::vector<long>> cell_vertices(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    for (const auto& p : domain.cells[c].polygon) cell_vertices[c].push_back(index.insert(p));
  }
  std::map<std::pair<long, long>, std::vector<int>> edge_cells;
  std::vector<std::vector<int>> vertex_cells(index.size());
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& vs = cell_vertices[c];
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const long a = vs[i], b = vs[(i + 1) % vs.size()];
      edge_cells[{std::min(a, b), std::max(a, b)}].push_back(static_cast<int>(c));
      vertex_cells[a].push_back(static_cast<int>(c));
    }
  }
  UnionFind uf(static_cast<int>(nc));
  std::set<std::pair<int, int>> adjacent;
  for (const auto& [e, cs] : edge_cells) {
    for (std::size_t i = 1; i < cs.size(); ++i) {
      uf.unite(cs[0], cs[i]);
      adjacent.insert({std::min(cs[0], cs[i]), std::max(cs[0], cs[i])});
    }
  }
  std::set<int> roots;
  for (std::size_t c = 0; c < nc; ++c) roots.insert(uf.find(static_cast<int>(c)));
  rep.component_count = static_cast<int>(roots.size());
  for (std::size_t v = 0; v < vertex_cells.size(); ++v) {
    const auto& cs = vertex_cells[v];
    if (cs.size() != 2) continue;
    if (!adjacent.count({std::min(cs[0], cs[1]), std::max(cs[0], cs[1])})) {
      rep.corner_coupled.push_back(index.points()[v]);
    }
  }
  return rep;
}

}  // namespace fraclap
