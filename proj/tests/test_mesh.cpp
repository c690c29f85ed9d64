#include <cmath>
#include <sstream>

#include "doctest.h"

#include "fraclap/error.hpp"
#include "fraclap/mesh.hpp"

using namespace fraclap;

TEST_CASE("unit square mesh covers the square and red refinement quadruples triangles") {
  const auto d = build_preset_domain(Preset::IntervalSquare, {}, 0);
  auto mesh = triangulate(d, 2);
  CHECK(mesh.area() == doctest::Approx(1.0));
  CHECK(is_conforming(mesh));
  const std::size_t t0 = mesh.triangles.size();
  const auto fine = refine(mesh, 2);
  CHECK(fine.triangles.size() == 16 * t0);
  CHECK(fine.area() == doctest::Approx(1.0));
  CHECK(is_conforming(fine));
  // Red refinement keeps the angles.
  CHECK(mesh_quality(fine).min_angle_deg == doctest::Approx(mesh_quality(mesh).min_angle_deg));
}

TEST_CASE("carpet meshes conform and have the carpet area") {
  for (int m = 1; m <= 3; ++m) {
    const auto d = build_preset_domain(Preset::SierpinskiCarpet, {}, m);
    const auto mesh = triangulate(d, 1);
    std::string why;
    CHECK_MESSAGE(is_conforming(mesh, &why), why);
    CHECK(mesh.area() == doctest::Approx(std::pow(8.0 / 9.0, m)));
  }
  const auto oct = triangulate(build_preset_domain(Preset::Octagasket, {}, 2), 1);
  CHECK(is_conforming(oct));
}

TEST_CASE("zero-overlap SG identifies single shared vertices") {
  const auto d = build_preset_domain(Preset::SgTriangle, {}, 1);
  const auto mesh = triangulate(d, 1);
  // Three triangles sharing three junction points: 3 * 3 - 3 vertices.
  CHECK(mesh.vertices.size() == 6);
  CHECK(mesh.triangles.size() == 3);
}

TEST_CASE("overlapping cells need an aligned subdivision") {
  PresetParams p;
  p.epsilon = 0.05;
  p.height = 0.01;
  const int n = aligned_subdivision(Preset::Sawtooth, p, 2);
  CHECK(n == 11);
  const auto d = build_preset_domain(Preset::Sawtooth, p, 3);
  CHECK(is_conforming(triangulate(d, n)));
  CHECK_THROWS_AS(triangulate(d, 2), InvalidInput);
}

TEST_CASE("OFF round trip") {
  const auto mesh = triangulate(build_preset_domain(Preset::SierpinskiCarpet, {}, 1), 1);
  std::stringstream ss;
  write_off(ss, mesh);
  const auto back = read_off(ss);
  REQUIRE(back.vertices.size() == mesh.vertices.size());
  REQUIRE(back.triangles.size() == mesh.triangles.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) CHECK((back.vertices[i] - mesh.vertices[i]).norm() == 0.0);
  CHECK(back.triangles == mesh.triangles);
  std::stringstream bad("OFF\n3 1 0\n0 0 0\n");
  CHECK_THROWS_AS(read_off(bad), InvalidInput);
}
