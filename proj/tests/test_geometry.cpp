#include <cmath>
#include <set>

#include "doctest.h"

#include "fraclap/error.hpp"
#include "fraclap/geometry.hpp"

using namespace fraclap;

namespace {

double total_area(const CellDomain& d) {
  double a = 0.0;
  for (const auto& c : d.cells) a += polygon_area(c.polygon);
  return a;
}

bool same_polygon(const Polygon& a, const Polygon& b, double tol = 1e-12) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] - b[i]).norm() > tol) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("similarity maps compose and invert") {
  const double c = std::cos(0.3), s = std::sin(0.3);
  Mat2 R;
  R << c, -s, s, c;
  const AffineMap f = AffineMap::similarity(0.5 * R, Vec2(0.2, -0.1));
  CHECK(f.contraction_ratio == doctest::Approx(0.5));
  CHECK(f.is_similarity());
  const AffineMap id = f.compose(f.inverse());
  const Vec2 p(0.7, 0.4);
  CHECK((id.apply(p) - p).norm() < 1e-14);
  const AffineMap h = AffineMap::homothety(1.0 / 3.0, Vec2(1, 1));
  CHECK((h.apply(Vec2(1, 1)) - Vec2(1, 1)).norm() < 1e-15);
  CHECK((h.apply(Vec2(0, 0)) - Vec2(2.0 / 3.0, 2.0 / 3.0)).norm() < 1e-15);
}

TEST_CASE("carpet cell counts and areas follow the IFS") {
  for (int m = 0; m <= 3; ++m) {
    const auto sc = build_preset_domain(Preset::SierpinskiCarpet, {}, m);
    CHECK(sc.cells.size() == static_cast<std::size_t>(std::pow(8, m)));
    CHECK(total_area(sc) == doctest::Approx(std::pow(8.0 / 9.0, m)));
    const auto c12 = build_preset_domain(Preset::Carpet12_16, {}, m);
    CHECK(c12.cells.size() == static_cast<std::size_t>(std::pow(12, m)));
    CHECK(total_area(c12) == doctest::Approx(std::pow(12.0 / 16.0, m)));
    const auto c13 = build_preset_domain(Preset::Carpet13_16, {}, m);
    CHECK(c13.cells.size() == static_cast<std::size_t>(std::pow(13, m)));
  }
}

TEST_CASE("SC removes the middle ninth") {
  const auto sc = build_preset_domain(Preset::SierpinskiCarpet, {}, 1);
  for (const auto& c : sc.cells) {
    Vec2 centroid = Vec2::Zero();
    for (const auto& p : c.polygon) centroid += p / static_cast<double>(c.polygon.size());
    CHECK((centroid - Vec2(0.5, 0.5)).norm() > 0.3);
  }
}

TEST_CASE("cell polygons equal the composed word maps") {
  for (Preset p : {Preset::SierpinskiCarpet, Preset::Octagasket, Preset::SgTriangle}) {
    const auto d = build_preset_domain(p, {}, 2);
    for (const auto& c : d.cells) CHECK(same_polygon(c.polygon, d.compose_word(c.word)));
  }
}

TEST_CASE("words prepend the level-1 letter") {
  const auto d = build_preset_domain(Preset::SierpinskiCarpet, {}, 2);
  // Every level-2 cell lies inside the level-1 cell named by word[0].
  const auto d1 = build_preset_domain(Preset::SierpinskiCarpet, {}, 1);
  for (const auto& c : d.cells) {
    const Polygon& parent = d1.cells[c.word[0]].polygon;
    for (const auto& p : c.polygon) CHECK(point_in_convex_polygon(parent, p, 1e-12));
  }
}

TEST_CASE("octagasket: eight homotheties of the unit octagon fixing its vertices") {
  const auto d = build_preset_domain(Preset::Octagasket, {}, 1);
  REQUIRE(d.cells.size() == 8);
  const double r = 1.0 - std::sqrt(2.0) / 2.0;
  for (int k = 0; k < 8; ++k) {
    const Vec2 v(std::cos(k * M_PI / 4), std::sin(k * M_PI / 4));
    CHECK(d.ifs.maps[k].contraction_ratio == doctest::Approx(r));
    CHECK((d.ifs.maps[k].apply(v) - v).norm() < 1e-14);
  }
  // Neighbouring copies touch: side of the small octagon equals the gap along the big side.
  CHECK(polygon_area(d.base) == doctest::Approx(2.0 * std::sqrt(2.0)));
}

TEST_CASE("SG with zero overlap has 3^m cells of area 4^-m") {
  const auto d = build_preset_domain(Preset::SgTriangle, {}, 3);
  CHECK(d.cells.size() == 27);
  CHECK(total_area(d) == doctest::Approx(27.0 / 64.0 * std::sqrt(3.0) / 4.0));
}

TEST_CASE("sawtooth is rescaled to the unit base") {
  PresetParams p;
  p.epsilon = 0.1;
  p.height = 0.01;
  const auto d = build_preset_domain(Preset::Sawtooth, p, 4);
  double lo = 1e9, hi = -1e9;
  for (const auto& c : d.cells) {
    for (const auto& q : c.polygon) {
      lo = std::min(lo, q.x());
      hi = std::max(hi, q.x());
    }
  }
  CHECK(lo == doctest::Approx(0.0));
  CHECK(hi == doctest::Approx(1.0));
  CHECK_THROWS_AS(build_preset_domain(Preset::Sawtooth, PresetParams{}, 2), InvalidInput);
}

TEST_CASE("preset names round trip and unknown names are rejected") {
  for (Preset p : {Preset::IntervalSquare, Preset::Sawtooth, Preset::SgTriangle, Preset::SierpinskiCarpet,
                   Preset::Carpet12_16, Preset::Carpet13_16, Preset::Octagasket}) {
    CHECK(parse_preset(preset_name(p)) == p);
  }
  CHECK_THROWS_AS(parse_preset("menger"), InvalidInput);
}

TEST_CASE("xoshiro is deterministic and below() stays in range") {
  Xoshiro256ss a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
  }
  CHECK(a.next() != c.next());
  for (int i = 0; i < 1000; ++i) CHECK(a.below(7) < 7);
}

TEST_CASE("random carpets regenerate per seed, stay connected and avoid corner couplings") {
  for (int k : {2, 3}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      CarpetSpec s;
      s.grid = 4;
      s.removals_per_level = {k};
      s.levels = 3;
      s.seed = seed;
      const auto d1 = random_carpet(s);
      const auto d2 = random_carpet(s);
      REQUIRE(d1.cells.size() == d2.cells.size());
      CHECK(d1.cells.size() == static_cast<std::size_t>(std::pow(16 - k, 3)));
      for (std::size_t i = 0; i < d1.cells.size(); ++i) CHECK(d1.cells[i].word == d2.cells[i].word);
      const auto rep = connectivity_report(d1);
      CHECK(rep.component_count == 1);
      CHECK(rep.corner_coupled.empty());
    }
  }
}

TEST_CASE("bifurcate keeps the levels above the restart") {
  CarpetSpec s;
  s.grid = 4;
  s.removals_per_level = {3};
  s.levels = 3;
  s.seed = 5;
  const auto base = random_carpet(s);
  const auto fork = bifurcate(base, 3, 99);
  std::set<std::vector<int>> a, b;
  for (const auto& c : base.cells) a.insert({c.word.begin(), c.word.begin() + 2});
  for (const auto& c : fork.cells) b.insert({c.word.begin(), c.word.begin() + 2});
  CHECK(a == b);
  CHECK(connectivity_report(fork).component_count == 1);
  // The fork replays from its own spec.
  REQUIRE(fork.carpet.has_value());
  const auto again = random_carpet(*fork.carpet);
  REQUIRE(again.cells.size() == fork.cells.size());
  for (std::size_t i = 0; i < again.cells.size(); ++i) CHECK(again.cells[i].word == fork.cells[i].word);
}

TEST_CASE("carpet spec validation") {
  CarpetSpec s;
  s.grid = 4;
  s.removals_per_level = {15};
  s.levels = 2;
  CHECK_THROWS_AS(s.validate(), InvalidInput);
  s.removals_per_level = {2, 3, 4};
  CHECK_THROWS_AS(s.validate(), InvalidInput);
  s.removals_per_level = {2, 3};
  CHECK_NOTHROW(s.validate());
}
