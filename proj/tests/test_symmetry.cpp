#include <cmath>
#include <complex>
#include <functional>

#include "doctest.h"

#include "fraclap/error.hpp"
#include "fraclap/spectral.hpp"
#include "fraclap/symmetry.hpp"

using namespace fraclap;

namespace {

const double kPi = std::acos(-1.0);

Eigen::VectorXd interpolate(const TriMesh& mesh, const std::function<double(const Vec2&)>& f) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(mesh.vertices.size()));
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) v[i] = f(mesh.vertices[i]);
  return v;
}

struct Fixture {
  CellDomain domain;
  TriMesh mesh;
  AssembledSystem sys;
  DihedralGroup group;
  VertexAction action;

  Fixture(Preset p, int level, int refinements)
      : domain(build_preset_domain(p, {}, level)),
        mesh(refine(triangulate(domain, 1), refinements)),
        sys(assemble(mesh)),
        group(symmetry_group(domain)),
        action(vertex_action(group, mesh)) {}

  RepLabel label(const std::vector<std::function<double(const Vec2&)>>& fs) const {
    std::vector<Eigen::VectorXd> w;
    for (const auto& f : fs) w.push_back(interpolate(mesh, f));
    return classify(w, group, action, sys.M).label;
  }
};

}  // namespace

TEST_CASE("dihedral groups close under composition") {
  for (int n : {4, 8}) {
    const auto G = DihedralGroup::make(n, Vec2(0.3, -0.2));
    CHECK(G.verify() < 1e-12);
    for (int g = 0; g < G.size(); ++g) {
      CHECK(G.compose(g, G.inverse(g)) == 0);
      if (G.is_reflection(g)) CHECK(G.compose(g, g) == 0);
    }
  }
  const auto D4 = DihedralGroup::make(4, Vec2(0, 0));
  // The horizontal-axis reflection maps (x, y) to (x, -y).
  CHECK((D4.apply(D4.rho_H, Vec2(1, 2)) - Vec2(1, -2)).norm() < 1e-15);
  CHECK((D4.apply(D4.rho_V, Vec2(1, 2)) - Vec2(-1, 2)).norm() < 1e-15);
  CHECK((D4.apply(D4.rho_D2, Vec2(1, 2)) - Vec2(2, 1)).norm() < 1e-15);
  CHECK((D4.apply(D4.rho_D1, Vec2(1, 2)) - Vec2(-2, -1)).norm() < 1e-15);
  const auto D8 = DihedralGroup::make(8, Vec2(0, 0));
  CHECK(D8.d4_reflections().size() == 4);
  CHECK(D8.other_reflections().size() == 4);
}

TEST_CASE("vertex action pulls functions back by the inverse element") {
  const Fixture fx(Preset::IntervalSquare, 0, 2);
  const auto f = [](const Vec2& p) { return p.x() + 3.0 * p.y() * p.y(); };
  const Eigen::VectorXd v = interpolate(fx.mesh, f);
  for (int g = 0; g < fx.group.size(); ++g) {
    const int gi = fx.group.inverse(g);
    const Eigen::VectorXd want = interpolate(fx.mesh, [&](const Vec2& p) { return f(fx.group.apply(gi, p)); });
    CHECK((fx.action.apply(g, v) - want).norm() < 1e-12);
  }
}

TEST_CASE("square eigenfunctions carry the expected D4 labels") {
  const Fixture fx(Preset::IntervalSquare, 0, 2);
  using P = const Vec2&;
  const auto c = [](double k, double t) { return std::cos(kPi * k * t); };
  CHECK(fx.label({[&](P p) { return c(1, p.x()); }, [&](P p) { return c(1, p.y()); }}) == RepLabel::Two);
  CHECK(fx.label({[&](P p) { return c(1, p.x()) * c(1, p.y()); }}) == RepLabel::OnePM);
  CHECK(fx.label({[&](P p) { return c(2, p.x()) + c(2, p.y()); }}) == RepLabel::OnePP);
  CHECK(fx.label({[&](P p) { return c(2, p.x()) - c(2, p.y()); }}) == RepLabel::OneMP);
  CHECK(fx.label({[&](P p) { return c(1, p.x()) * c(3, p.y()) - c(3, p.x()) * c(1, p.y()); }}) ==
        RepLabel::OneMM);
}

TEST_CASE("harmonic polynomials carry the expected D8 labels on the octagasket") {
  const Fixture fx(Preset::Octagasket, 1, 1);
  using P = const Vec2&;
  const auto z = [](P p, int k) { return std::pow(std::complex<double>(p.x(), p.y()), k); };
  CHECK(fx.label({[&](P p) { return z(p, 8).real(); }}) == RepLabel::OnePP);
  CHECK(fx.label({[&](P p) { return z(p, 8).imag(); }}) == RepLabel::OneMM);
  CHECK(fx.label({[&](P p) { return z(p, 4).real(); }}) == RepLabel::OneMP);
  CHECK(fx.label({[&](P p) { return z(p, 4).imag(); }}) == RepLabel::OnePM);
  CHECK(fx.label({[&](P p) { return z(p, 1).real(); }, [&](P p) { return z(p, 1).imag(); }}) == RepLabel::Two1);
  CHECK(fx.label({[&](P p) { return z(p, 2).real(); }, [&](P p) { return z(p, 2).imag(); }}) == RepLabel::Two2);
  CHECK(fx.label({[&](P p) { return z(p, 3).real(); }, [&](P p) { return z(p, 3).imag(); }}) == RepLabel::Two3);
}

TEST_CASE("mixed-parity inputs are numerical failures") {
  const Fixture fx(Preset::IntervalSquare, 0, 2);
  const auto v = interpolate(fx.mesh, [](const Vec2& p) { return std::cos(kPi * p.x()) + 0.5 * std::cos(kPi * p.y()); });
  CHECK_THROWS_AS(classify({v}, fx.group, fx.action, fx.sys.M), NumericalFailure);
}

TEST_CASE("label names round trip") {
  for (RepLabel l : {RepLabel::OnePP, RepLabel::OnePM, RepLabel::OneMP, RepLabel::OneMM, RepLabel::Two, RepLabel::Two1,
                     RepLabel::Two2, RepLabel::Two3}) {
    CHECK(parse_label(label_name(l)) == l);
  }
  CHECK(label_dimension(RepLabel::OneMM) == 1);
  CHECK(label_dimension(RepLabel::Two2) == 2);
  CHECK_THROWS_AS(parse_label("3"), InvalidInput);
}

TEST_CASE("asymmetric meshes have no vertex action") {
  const auto d = build_preset_domain(Preset::Carpet13_16, {}, 1);
  const auto mesh = triangulate(d, 1);
  CHECK_THROWS_AS(vertex_action(DihedralGroup::make(4, Vec2(0.5, 0.5)), mesh), InvalidInput);
}

TEST_CASE("SC miniaturization scales eigenvalues by exactly 9") {
  const auto d1 = build_preset_domain(Preset::SierpinskiCarpet, {}, 1);
  const auto d2 = build_preset_domain(Preset::SierpinskiCarpet, {}, 2);
  const auto m1 = triangulate(d1, 1), m2 = triangulate(d2, 1);
  const auto s1 = assemble(m1), s2 = assemble(m2);
  SolveOptions o;
  o.nev = 10;
  const auto sp = solve_lowest(s1.K, s1.M, o);
  const auto G = symmetry_group(d1);
  const auto a1 = vertex_action(G, m1);
  ClusterParams cp;
  const auto vals = sp.values();
  for (const auto& c : cluster_multiplicities(std::vector<double>(vals.begin() + 1, vals.end()), cp)) {
    if (c.start + c.size >= 9) break;
    std::vector<Eigen::VectorXd> w;
    for (int i = 0; i < c.size; ++i) w.push_back(sp.pairs[1 + c.start + i].vector);
    const auto cls = classify(w, G, a1, s1.M);
    const auto basis = c.size == 2 ? adapt_basis(w, cls.label, G, a1, s1.M) : w;
    for (const auto& mini : miniaturize(basis, cls.label, d1, m1, d2, m2)) {
      const auto chk = verify_miniaturization(mini, c.value, s2.K, s2.M, 1.0 / 3.0);
      CHECK(chk.expected == doctest::Approx(9.0));
      CHECK(chk.factor == doctest::Approx(9.0).epsilon(1e-8));
      CHECK(chk.residual < 1e-8);
    }
  }
}
