// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
// Usage: acceptance [--known-failure N]...  Exit status is nonzero when a criterion
// outside the known-failure list fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fraclap/error.hpp"
#include "fraclap/fem.hpp"
#include "fraclap/geometry.hpp"
#include "fraclap/mesh.hpp"
#include "fraclap/oracles.hpp"
#include "fraclap/spectral.hpp"
#include "fraclap/symmetry.hpp"

using namespace fraclap;

namespace {

const double kPi = std::acos(-1.0);

// Criterion 1
constexpr double kRectMaxRelErr = 0.01;
constexpr double kRectOrder = 2.0;
constexpr double kRectOrderTol = 0.3;
constexpr double kRectSeconds = 10.0;
// Criterion 2
constexpr double kDecimationRelErr = 1e-3;
constexpr double kDecimationSeconds = 1.0;
// Criterion 3
constexpr double kSgRelErr = 0.03;
constexpr double kSgSeconds = 300.0;
// Criterion 4
constexpr double kSawtoothEpsilon = 0.05;  // overlap half-width at level m is kSawtoothEpsilon * 2^-m
constexpr double kSawtoothHeight = 0.01;
constexpr double kSawtoothRelErr = 0.02;
constexpr double kSawtoothSeconds = 300.0;
// Criterion 5
constexpr double kScRLo = 9.8, kScRHi = 10.2;
constexpr int kScAnchorIndex = 8;
constexpr double kScSeconds = 600.0;
// Criterion 6
constexpr double kOctRLo = 14.7, kOctRHi = 15.2;
constexpr double kOctTau = 1e-3;
constexpr double kOctMatchTol = 5e-3;
constexpr double kOctSeconds = 600.0;
// Criterion 7
constexpr double kSolverTol = 1e-9;
constexpr double kMiniFactorRelTol = 1e-8;
constexpr double kMiniResidualTol = 10.0 * kSolverTol;
constexpr double kMiniSeconds = 120.0;
// Criterion 8
constexpr double kTableTau = 5e-3;
// Criterion 9
constexpr double kEnergyAbsErr = 1e-4;
// Criterion 10
constexpr double kIntervalAlphaLo = 0.45, kIntervalAlphaHi = 0.55;
constexpr double kScAlphaLo = 0.82, kScAlphaHi = 0.92;
constexpr int kScWeylNev = 100;
// Criterion 11
constexpr int kCarpetSeeds = 100;
constexpr std::uint64_t kCarpetRatioSeed = 1;
constexpr int kCarpetNev = 30;
constexpr double kK3Lo = 0.60, kK3Hi = 0.95;
constexpr double kK2Lo = 0.75, kK2Hi = 0.95;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Problem {
  TriMesh mesh;
  AssembledSystem sys;
  Spectrum spec;
};

Problem solve(const CellDomain& d, int subdiv, int refinements, int nev) {
  Problem p;
  p.mesh = refine(triangulate(d, subdiv), refinements);
  p.sys = assemble(p.mesh);
  SolveOptions o;
  o.nev = nev;
  o.tol = kSolverTol;
  p.spec = solve_lowest(p.sys.K, p.sys.M, o);
  return p;
}

std::vector<double> nonzero(const std::vector<double>& v) {
  return {v.begin() + count_zero_modes(v), v.end()};
}

Outcome rectangle_convergence() {
  const auto d = build_preset_domain(Preset::IntervalSquare, {}, 0);
  const double exact[3] = {kPi * kPi, 2 * kPi * kPi, 4 * kPi * kPi};
  std::vector<std::array<double, 3>> err;
  for (int r = 0; r <= 3; ++r) {
    const auto p = solve(d, 2, r, 10);
    const auto cl = cluster_multiplicities(nonzero(p.spec.values()), {});
    if (cl.size() < 3) return {false, "fewer than three distinct eigenvalues"};
    err.push_back({});
    for (int i = 0; i < 3; ++i) err.back()[i] = std::abs(cl[i].value - exact[i]) / exact[i];
  }
  bool ok = true;
  std::ostringstream os;
  for (int i = 0; i < 3; ++i) {
    const double order = std::log2(err[2][i] / err[3][i]);
    ok = ok && err[3][i] < kRectMaxRelErr && std::abs(order - kRectOrder) <= kRectOrderTol;
    os << (i ? "; " : "") << "err " << fmt("%.2e", err[3][i]) << " order " << fmt("%.2f", order);
  }
  return {ok, os.str()};
}

Outcome decimation_limit() {
  bool ok = true;
  double worst = 0.0;
  for (int j = 1; j <= 4; ++j) {
    const double exact = 1.5 * std::pow(kPi * j, 2);
    const double rel = std::abs(std::pow(0.8, 12) * sg_row_eigenvalue(12, j) - exact) / exact;
    worst = std::max(worst, rel);
    ok = ok && rel < kDecimationRelErr;
  }
  return {ok, "worst rel err " + fmt("%.2e", worst)};
}

Outcome sg_zero_overlap() {
  const auto d = build_preset_domain(Preset::SgTriangle, {}, 4);
  const auto p = solve(d, 1, 3, 16);
  const auto n = normalize(p.spec);
  const auto cl = cluster_multiplicities(n.values, {});
  const double exact[4] = {5.0, 8.1039, 10.3056, 25.0};
  if (cl.size() < 5) return {false, "fewer than five clusters"};
  bool ok = true;
  std::ostringstream os;
  for (int i = 0; i < 4; ++i) {
    const double v = cl[i + 1].value;
    ok = ok && std::abs(v - exact[i]) / exact[i] < kSgRelErr;
    os << (i ? ", " : "") << fmt("%.4f", v);
  }
  return {ok, os.str()};
}

Outcome sawtooth() {
  PresetParams pp;
  pp.epsilon = kSawtoothEpsilon;
  pp.height = kSawtoothHeight;
  const auto d = build_preset_domain(Preset::Sawtooth, pp, 5);
  const auto p = solve(d, aligned_subdivision(Preset::Sawtooth, pp, 2), 2, 6);
  const auto n = normalize(p.spec);
  const double exact[3] = {4.0, 9.0, 16.0};
  bool ok = n.values.size() >= 4;
  std::ostringstream os;
  for (int i = 0; ok && i < 3; ++i) {
    const double v = n.values[i + 1];
    ok = ok && std::abs(v - exact[i]) / exact[i] < kSawtoothRelErr;
    os << (i ? ", " : "") << fmt("%.4f", v);
  }
  return {ok, os.str()};
}

Outcome sc_renormalization() {
  const auto d = build_preset_domain(Preset::SierpinskiCarpet, {}, 3);
  const auto p = solve(d, 1, 1, 60);
  const auto R = estimate_R(normalize(p.spec));
  const bool ok = R.has_R && R.R_hat >= kScRLo && R.R_hat <= kScRHi && R.anchor_high_index == kScAnchorIndex;
  return {ok, "R_hat " + fmt("%.4f", R.R_hat) + ", anchor n=" + std::to_string(R.anchor_high_index) +
                  ", score " + std::to_string(R.score)};
}

Outcome octagasket_renormalization() {
  const auto d = build_preset_domain(Preset::Octagasket, {}, 3);
  const auto p = solve(d, 1, 1, 60);
  ClusterParams cp;
  cp.tau = kOctTau;
  RSearchWindow w;
  w.match_tol = kOctMatchTol;
  const auto n = normalize(p.spec);
  const auto R = estimate_R(n, cp, w);
  auto cl = cluster_multiplicities(n.values, cp);
  cl.pop_back();  // the last cluster may be cut by nev
  std::set<int> sizes;
  for (const auto& c : cl) sizes.insert(c.size);
  const bool sizes_ok = std::all_of(sizes.begin(), sizes.end(), [](int s) { return s == 1 || s == 2; });
  const bool ok = R.has_R && R.R_hat >= kOctRLo && R.R_hat <= kOctRHi && sizes_ok;
  std::string s;
  for (int z : sizes) s += (s.empty() ? "" : ",") + std::to_string(z);
  return {ok, "R_hat " + fmt("%.4f", R.R_hat) + ", cluster sizes {" + s + "}"};
}

struct MiniStats {
  int checked = 0;
  double worst_factor = 0.0;
  double worst_residual = 0.0;
  int pm_inputs = 0;
  int pm_to_pp = 0;
  std::string pm_result;
};

MiniStats miniaturize_first15(Preset preset) {
  const auto d1 = build_preset_domain(preset, {}, 1);
  const auto d2 = build_preset_domain(preset, {}, 2);
  const auto p1 = solve(d1, 1, 1, 20);
  const auto m2 = refine(triangulate(d2, 1), 1);
  const auto s2 = assemble(m2);
  const auto G = symmetry_group(d1);
  const auto a1 = vertex_action(G, p1.mesh);
  const auto a2 = vertex_action(G, m2);
  const double contraction = d1.ifs.maps[0].contraction_ratio;
  const auto values = p1.spec.values();
  const int z = count_zero_modes(values);
  MiniStats st;
  ClusterParams cp;
  cp.tau = kTableTau;
  for (const auto& c : cluster_multiplicities(nonzero(values), cp)) {
    if (c.start >= 15) break;
    std::vector<Eigen::VectorXd> w;
    for (int i = 0; i < c.size; ++i) w.push_back(p1.spec.pairs[z + c.start + i].vector);
    Classification cls;
    try {
      cls = classify(w, G, a1, p1.sys.M);
    } catch (const NumericalFailure&) {
      continue;  // unclassified clusters are outside the criterion
    }
    const auto basis = label_dimension(cls.label) == 2 ? adapt_basis(w, cls.label, G, a1, p1.sys.M) : w;
    const auto minis = miniaturize(basis, cls.label, d1, p1.mesh, d2, m2);
    for (const auto& m : minis) {
      const auto chk = verify_miniaturization(m, c.value, s2.K, s2.M, contraction);
      st.worst_factor = std::max(st.worst_factor, std::abs(chk.factor - chk.expected) / chk.expected);
      st.worst_residual = std::max(st.worst_residual, chk.residual);
      ++st.checked;
      if (cls.label == RepLabel::OnePM) {
        ++st.pm_inputs;
        const auto back = classify({m}, G, a2, s2.M).label;
        if (back == RepLabel::OnePP) ++st.pm_to_pp;
        st.pm_result += (st.pm_result.empty() ? "" : ",") + label_name(back);
      }
    }
  }
  return st;
}

Outcome miniaturization() {
  const auto sc = miniaturize_first15(Preset::SierpinskiCarpet);
  const auto c12 = miniaturize_first15(Preset::Carpet12_16);
  const bool exact = sc.checked > 0 && c12.checked > 0 && sc.worst_factor <= kMiniFactorRelTol &&
                     c12.worst_factor <= kMiniFactorRelTol && sc.worst_residual <= kMiniResidualTol &&
                     c12.worst_residual <= kMiniResidualTol;
  const bool relabel = sc.pm_inputs > 0 && sc.pm_to_pp == sc.pm_inputs;
  std::ostringstream os;
  os << "factors: SC " << sc.checked << " outputs worst rel " << fmt("%.1e", sc.worst_factor) << " res "
     << fmt("%.1e", sc.worst_residual) << ", 12/16 " << c12.checked << " outputs worst rel "
     << fmt("%.1e", c12.worst_factor) << " res " << fmt("%.1e", c12.worst_residual) << (exact ? " [ok]" : " [bad]")
     << "; SC 1+- inputs re-classify as " << sc.pm_result << " (want 1++)" << (relabel ? " [ok]" : " [bad]");
  return {exact && relabel, os.str()};
}

Outcome representation_table() {
  const std::vector<std::string> want = {"2", "2", "1+-", "1-+", "2", "2", "1++", "2",
                                         "2", "1+-", "1--", "1++", "2", "2", "1-+"};
  const auto d = build_preset_domain(Preset::SierpinskiCarpet, {}, 3);
  const auto p = solve(d, 1, 1, 20);
  const auto G = symmetry_group(d);
  const auto a = vertex_action(G, p.mesh);
  const auto values = p.spec.values();
  const int z = count_zero_modes(values);
  ClusterParams cp;
  cp.tau = kTableTau;
  std::vector<std::string> got;
  for (const auto& c : cluster_multiplicities(nonzero(values), cp)) {
    if (c.start >= 15) break;
    std::vector<Eigen::VectorXd> w;
    for (int i = 0; i < c.size; ++i) w.push_back(p.spec.pairs[z + c.start + i].vector);
    std::string label = "?";
    try {
      label = label_name(classify(w, G, a, p.sys.M).label);
    } catch (const NumericalFailure&) {
    }
    for (int i = 0; i < c.size && static_cast<int>(got.size()) < 15; ++i) got.push_back(label);
  }
  std::string s;
  for (const auto& g : got) s += (s.empty() ? "" : ",") + g;
  return {got == want, s};
}

Outcome energy_extension() {
  CosineSeries f;
  f.a = {0.0, 1.0};
  bool monotone = true;
  double prev = -1.0, last = 0.0;
  for (int m = 1; m <= 12; ++m) {
    last = extension_energy(f, m).scaled;
    monotone = monotone && last > prev;
    prev = last;
  }
  const double err = std::abs(last - kPi * kPi / 2);
  return {monotone && err < kEnergyAbsErr, "2^12 E_12 - pi^2/2 = " + fmt("%.2e", err) +
                                               (monotone ? ", monotone" : ", not monotone")};
}

Outcome weyl_alpha() {
  std::vector<double> interval;
  for (int n = 1; n <= 200; ++n) interval.push_back(std::pow(kPi * n, 2));
  const double a1 = weyl(interval).alpha;
  const auto d = build_preset_domain(Preset::SierpinskiCarpet, {}, 3);
  const auto p = solve(d, 1, 3, kScWeylNev);
  const double a2 = weyl(p.spec.values()).alpha;
  const bool ok = a1 >= kIntervalAlphaLo && a1 <= kIntervalAlphaHi && a2 >= kScAlphaLo && a2 <= kScAlphaHi;
  return {ok, "interval " + fmt("%.4f", a1) + ", SC L3 ref3 nev " + std::to_string(kScWeylNev) + " " +
                  fmt("%.4f", a2)};
}

Outcome random_carpets() {
  bool structural = true;
  int bad = 0;
  for (int k : {2, 3}) {
    for (int s = 1; s <= kCarpetSeeds; ++s) {
      CarpetSpec spec;
      spec.grid = 4;
      spec.removals_per_level = {k};
      spec.levels = 4;
      spec.seed = static_cast<std::uint64_t>(s);
      const auto a = random_carpet(spec);
      const auto b = random_carpet(spec);
      bool same = a.cells.size() == b.cells.size();
      for (std::size_t i = 0; same && i < a.cells.size(); ++i) same = a.cells[i].word == b.cells[i].word;
      const auto rep = connectivity_report(a);
      if (!same || rep.component_count != 1 || !rep.corner_coupled.empty()) {
        structural = false;
        ++bad;
      }
    }
  }
  // Finest level pair: median of lambda^(4) / lambda^(3) over the first nonzero clusters.
  auto median_ratio = [](int k) {
    std::vector<double> spec[2];
    for (int l = 3; l <= 4; ++l) {
      CarpetSpec cs;
      cs.grid = 4;
      cs.removals_per_level = {k};
      cs.levels = l;
      cs.seed = kCarpetRatioSeed;
      spec[l - 3] = solve(random_carpet(cs), 1, 0, kCarpetNev).spec.values();
    }
    return estimate_r(spec[1], spec[0], kCarpetNev - 2).r_hat;
  };
  const double r2 = median_ratio(2), r3 = median_ratio(3);
  const bool bands = r3 >= kK3Lo && r3 <= kK3Hi && r2 >= kK2Lo && r2 <= kK2Hi;
  return {structural && bands, std::to_string(2 * kCarpetSeeds - bad) + "/" + std::to_string(2 * kCarpetSeeds) +
                                   " carpets deterministic+connected, median ratio k=2 " + fmt("%.4f", r2) +
                                   ", k=3 " + fmt("%.4f", r3)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--known-failure") known.insert(std::atoi(argv[++i]));
  }
  struct Criterion {
    int id;
    const char* name;
    double seconds;  // <= 0: no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "rectangle convergence", kRectSeconds, rectangle_convergence},
      {2, "spectral decimation limit", kDecimationSeconds, decimation_limit},
      {3, "SG zero-overlap spectrum", kSgSeconds, sg_zero_overlap},
      {4, "sawtooth", kSawtoothSeconds, sawtooth},
      {5, "SC renormalization", kScSeconds, sc_renormalization},
      {6, "octagasket renormalization", kOctSeconds, octagasket_renormalization},
      {7, "miniaturization exactness", kMiniSeconds, miniaturization},
      {8, "representation table", 0.0, representation_table},
      {9, "energy-extension limit", 0.0, energy_extension},
      {10, "Weyl alpha", 0.0, weyl_alpha},
      {11, "random carpets", 0.0, random_carpets},
  };
  int unexpected = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.seconds > 0 && secs > c.seconds) {
      o.pass = false;
      o.detail += " (over the " + fmt("%.0f", c.seconds) + " s budget)";
    }
    std::printf("[%s] %2d %s: %s (%.1f s)%s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                !o.pass && known.count(c.id) ? " [known]" : "");
    std::fflush(stdout);
    if (!o.pass && !known.count(c.id)) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
