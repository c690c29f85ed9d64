#include "fraclap/symmetry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

#include <Eigen/Eigenvalues>

#include "fraclap/error.hpp"
#include "fraclap/point_index.hpp"

namespace fraclap {

namespace {

constexpr double kPi = 3.14159265358979323846;

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Cell patterns for two-dimensional labels on carpets, rows listed from the top.
// Entries: "u", "-u", "v", "-v"; empty for omitted cells.
using CarpetTable = std::vector<std::vector<std::string>>;

const CarpetTable kSc3U = {{"u", "-v", "u"}, {"v", "", "v"}, {"u", "-v", "u"}};
const CarpetTable kSc3V = {{"v", "-u", "v"}, {"u", "", "u"}, {"v", "-u", "v"}};
const CarpetTable kCarpet4U = {
    {"u", "-v", "u", "-v"}, {"v", "", "", "-u"}, {"u", "", "", "-v"}, {"v", "-u", "v", "-u"}};
// The published v_2 table has two sign slips (third column, top and bottom rows);
// these entries are the ones that keep the copies continuous across cell boundaries.
const CarpetTable kCarpet4V = {
    {"v", "-u", "v", "-u"}, {"u", "", "", "-v"}, {"v", "", "", "-u"}, {"u", "-v", "u", "-v"}};

// Octagon ring patterns, entry k belongs to the cell fixing the vertex at angle k * 45 degrees.
using RingTable = std::array<const char*, 8>;
const RingTable kRing21U = {"-v", "-v", "u", "u", "v", "v", "-u", "-u"};
const RingTable kRing21V = {"-u", "-u", "v", "v", "u", "u", "-v", "-v"};
const RingTable kRing22U = {"-u", "u", "u", "-u", "-u", "u", "u", "-u"};
const RingTable kRing22V = {"-v", "-v", "v", "v", "-v", "-v", "v", "v"};

PatternEntry parse_entry(const std::string& s) {
  PatternEntry e;
  std::string t = s;
  if (!t.empty() && t[0] == '-') {
    e.sign = -1;
    t = t.substr(1);
  }
  if (t == "u") {
    e.source = 0;
  } else if (t == "v") {
    e.source = 1;
  } else {
    throw InvalidInput("pattern entry must be u or v");
  }
  return e;
}

double m_dot(const VectorXd& a, const VectorXd& b, const SymmetricSparseMatrix& M) { return a.dot(M * b); }

bool is_carpet(Preset p) {
  return p == Preset::SierpinskiCarpet || p == Preset::Carpet12_16 || p == Preset::IntervalSquare;
}

// Restriction of element g to span(W): G^{-1} A with G = W^T M W, A = W^T M (g W).
MatrixXd restricted(const std::vector<VectorXd>& W, int g, const VertexAction& action, const SymmetricSparseMatrix& M,
                    MatrixXd* gram = nullptr) {
  const int k = static_cast<int>(W.size());
  MatrixXd G(k, k), A(k, k);
  std::vector<VectorXd> MW, gW;
  for (const auto& w : W) {
    MW.push_back(M * w);
    gW.push_back(action.apply(g, w));
  }
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      G(i, j) = W[i].dot(MW[j]);
      A(i, j) = MW[i].dot(gW[j]);
    }
  }
  if (gram) *gram = G;
  return G.ldlt().solve(A);
}

}  // namespace

DihedralGroup DihedralGroup::make(int n, const Vec2& center) {
  if (n < 1) throw InvalidInput("dihedral order must be positive");
  DihedralGroup g;
  g.n = n;
  g.center = center;
  for (int k = 0; k < n; ++k) {
    const double t = 2.0 * kPi * k / n;
    Mat2 r;
    r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    g.linear.push_back(r);
  }
  for (int k = 0; k < n; ++k) {
    const double t = 2.0 * kPi * k / n;  // twice the axis angle pi k / n
    Mat2 s;
    s << std::cos(t), std::sin(t), std::sin(t), -std::cos(t);
    g.linear.push_back(s);
  }
  for (auto& m : g.linear) {
    for (int i = 0; i < 4; ++i) {
      if (std::abs(m.data()[i]) < 1e-15) m.data()[i] = 0.0;
    }
  }
  g.rotation = n > 1 ? 1 : 0;
  if (n % 4 == 0) {
    g.rho_H = n;
    g.rho_D2 = n + n / 4;
    g.rho_V = n + n / 2;
    g.rho_D1 = n + 3 * n / 4;
  }
  return g;
}

std::vector<int> DihedralGroup::d4_reflections() const {
  if (rho_H < 0) return {};
  return {rho_H, rho_V, rho_D1, rho_D2};
}

std::vector<int> DihedralGroup::other_reflections() const {
  const auto d4 = d4_reflections();
  std::vector<int> out;
  for (int g = n; g < 2 * n; ++g) {
    if (std::find(d4.begin(), d4.end(), g) == d4.end()) out.push_back(g);
  }
  return out;
}

int DihedralGroup::compose(int g, int h) const {
  const Mat2 p = linear[g] * linear[h];
  int best = -1;
  double bd = 1e-6;
  for (int k = 0; k < size(); ++k) {
    const double d = (linear[k] - p).cwiseAbs().maxCoeff();
    if (d < bd) {
      bd = d;
      best = k;
    }
  }
  if (best < 0) throw NumericalFailure("dihedral group is not closed");
  return best;
}

int DihedralGroup::inverse(int g) const {
  if (is_reflection(g)) return g;
  return (n - g) % n;
}

double DihedralGroup::verify() const {
  double worst = 0.0;
  worst = std::max(worst, (linear[0] - Mat2::Identity()).cwiseAbs().maxCoeff());
  for (int g = 0; g < size(); ++g) {
    worst = std::max(worst, (linear[g] * linear[inverse(g)] - Mat2::Identity()).cwiseAbs().maxCoeff());
    worst = std::max(worst, (linear[g].transpose() * linear[g] - Mat2::Identity()).cwiseAbs().maxCoeff());
    if (is_reflection(g)) worst = std::max(worst, (linear[g] * linear[g] - Mat2::Identity()).cwiseAbs().maxCoeff());
    for (int h = 0; h < size(); ++h) {
      const int c = compose(g, h);
      worst = std::max(worst, (linear[c] - linear[g] * linear[h]).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

DihedralGroup symmetry_group(const CellDomain& domain) {
  Vec2 c = Vec2::Zero();
  for (const auto& p : domain.base) c += p;
  c /= static_cast<double>(domain.base.size());
  switch (domain.preset) {
    case Preset::IntervalSquare:
    case Preset::SierpinskiCarpet:
    case Preset::Carpet12_16:
      return DihedralGroup::make(4, c);
    case Preset::Octagasket:
      return DihedralGroup::make(8, c);
    default:
      throw InvalidInput("no dihedral symmetry for preset " + preset_name(domain.preset));
  }
}

VectorXd VertexAction::apply(int g, const VectorXd& f) const {
  const auto& p = perm.at(static_cast<std::size_t>(g));
  if (static_cast<std::size_t>(f.size()) != p.size()) throw InvalidInput("vector length does not match the mesh");
  VectorXd out(f.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[p[i]] = f[static_cast<Eigen::Index>(i)];
  return out;
}

VertexAction vertex_action(const DihedralGroup& group, const TriMesh& mesh, double tol) {
  if (tol <= 0) tol = 1e-9 * std::max(mesh.diameter(), 1e-300);
  PointIndex index(tol);
  for (const auto& v : mesh.vertices) index.force_insert(v);
  std::set<std::array<int, 3>> tris;
  for (auto t : mesh.triangles) {
    std::sort(t.begin(), t.end());
    tris.insert(t);
  }
  VertexAction act;
  for (int g = 0; g < group.size(); ++g) {
    std::vector<int> p(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      const long hit = index.find(group.apply(g, mesh.vertices[i]));
      if (hit < 0) throw InvalidInput("mesh is not symmetric: vertex " + std::to_string(i) + " has no image");
      p[i] = static_cast<int>(hit);
    }
    for (const auto& t : mesh.triangles) {
      std::array<int, 3> img = {p[t[0]], p[t[1]], p[t[2]]};
      std::sort(img.begin(), img.end());
      if (!tris.count(img)) throw InvalidInput("mesh is not symmetric: a triangle image is missing");
    }
    act.perm.push_back(std::move(p));
  }
  return act;
}

std::string label_name(RepLabel label) {
  switch (label) {
    case RepLabel::OnePP: return "1++";
    case RepLabel::OnePM: return "1+-";
    case RepLabel::OneMP: return "1-+";
    case RepLabel::OneMM: return "1--";
    case RepLabel::Two: return "2";
    case RepLabel::Two1: return "2_1";
    case RepLabel::Two2: return "2_2";
    case RepLabel::Two3: return "2_3";
  }
  return "?";
}

RepLabel parse_label(const std::string& name) {
  static const std::map<std::string, RepLabel> table = {
      {"1++", RepLabel::OnePP}, {"1+-", RepLabel::OnePM}, {"1-+", RepLabel::OneMP}, {"1--", RepLabel::OneMM},
      {"2", RepLabel::Two},     {"2_1", RepLabel::Two1},  {"2_2", RepLabel::Two2},  {"2_3", RepLabel::Two3},
  };
  auto it = table.find(name);
  if (it == table.end()) throw InvalidInput("unknown representation label: " + name);
  return it->second;
}

int label_dimension(RepLabel label) {
  switch (label) {
    case RepLabel::OnePP:
    case RepLabel::OnePM:
    case RepLabel::OneMP:
    case RepLabel::OneMM:
      return 1;
    default:
      return 2;
  }
}

Classification classify(const std::vector<VectorXd>& cluster, const DihedralGroup& group, const VertexAction& action,
                        const SymmetricSparseMatrix& M) {
  if (group.rho_H < 0) throw InvalidInput("classify needs a group containing D4");
  Classification out;
  if (cluster.size() == 1) {
    const VectorXd& u = cluster[0];
    const double uu = m_dot(u, u, M);
    if (!(uu > 0)) throw InvalidInput("classify: zero vector");
    for (int g = group.n; g < group.size(); ++g) out.parity.push_back(m_dot(action.apply(g, u), u, M) / uu);
    auto common_sign = [&](const std::vector<int>& refl) {
      int sign = 0;
      for (int g : refl) {
        const double s = out.parity[g - group.n];
        if (std::abs(s) < 0.99) throw NumericalFailure("classify: ambiguous parity " + std::to_string(s));
        const int sg = s > 0 ? 1 : -1;
        if (sign != 0 && sg != sign) throw NumericalFailure("classify: parities disagree within a reflection class");
        sign = sg;
      }
      return sign;
    };
    int a = 0, b = 0;
    if (group.n == 4) {
      a = common_sign({group.rho_D1, group.rho_D2});
      b = common_sign({group.rho_H, group.rho_V});
    } else {
      a = common_sign(group.other_reflections());
      b = common_sign(group.d4_reflections());
    }
    out.label = a > 0 ? (b > 0 ? RepLabel::OnePP : RepLabel::OnePM) : (b > 0 ? RepLabel::OneMP : RepLabel::OneMM);
    return out;
  }
  if (cluster.size() != 2) throw InvalidInput("classify: cluster size must be 1 or 2");
  if (group.n == 4) {
    out.character = restricted(cluster, group.rho_H, action, M).trace();
    if (std::abs(out.character) > 0.05) {
      throw NumericalFailure("classify: cluster is not a two-dimensional representation (trace " +
                             std::to_string(out.character) + ")");
    }
    out.label = RepLabel::Two;
    return out;
  }
  out.character = restricted(cluster, group.rotation, action, M).trace();
  const double s2 = std::sqrt(2.0);
  const std::array<std::pair<double, RepLabel>, 3> refs = {
      {{s2, RepLabel::Two1}, {0.0, RepLabel::Two2}, {-s2, RepLabel::Two3}}};
  int hits = 0;
  for (const auto& [value, label] : refs) {
    if (std::abs(out.character - value) <= 0.05) {
      out.label = label;
      ++hits;
    }
  }
  if (hits != 1) throw NumericalFailure("classify: rotation character " + std::to_string(out.character) + " is ambiguous");
  return out;
}

std::vector<VectorXd> adapt_basis(const std::vector<VectorXd>& cluster, RepLabel label, const DihedralGroup& group,
                                  const VertexAction& action, const SymmetricSparseMatrix& M) {
  if (cluster.size() != 2 || label_dimension(label) != 2) throw InvalidInput("adapt_basis needs a two-dimensional cluster");
  const bool d8 = group.n == 8;
  if (d8 == (label == RepLabel::Two)) throw InvalidInput("label does not belong to the group");
  // D4: u is even under rho''_D. D8: u is odd under the reflection across the axis at pi/8.
  const int g = d8 ? group.n + 1 : group.rho_D2;
  const bool even = !d8;
  MatrixXd G;
  const MatrixXd R = restricted(cluster, g, action, M, &G);
  // G R is symmetric for an M-orthogonal involution; solve (G R) c = mu G c.
  const MatrixXd A = G * R;
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(0.5 * (A + A.transpose()), G);
  if (es.info() != Eigen::Success) throw NumericalFailure("adapt_basis: projection failed");
  // Ascending: column 0 is the -1 eigenvector, column 1 the +1 eigenvector.
  const int col = even ? 1 : 0;
  VectorXd u = es.eigenvectors()(0, col) * cluster[0] + es.eigenvectors()(1, col) * cluster[1];
  u /= std::sqrt(m_dot(u, u, M));
  normalize_sign(u);
  int h = group.rho_H;
  if (label == RepLabel::Two1 || label == RepLabel::Two3) h = 2;  // rotation by pi/2
  if (label == RepLabel::Two2) h = 1;                              // rotation by pi/4
  VectorXd v = action.apply(h, u);
  return {u, v};
}

SignPattern miniaturization_pattern(const CellDomain& domain, RepLabel label, int component) {
  const auto& maps = domain.ifs.maps;
  if (maps.empty()) throw InvalidInput("domain has no maps");
  SignPattern pat;
  pat.cells.resize(maps.size());
  const bool two = label_dimension(label) == 2;
  if (is_carpet(domain.preset)) {
    if (label == RepLabel::Two1 || label == RepLabel::Two2 || label == RepLabel::Two3) {
      throw InvalidInput("carpet labels are D4 labels");
    }
    const int g = static_cast<int>(std::lround(1.0 / maps[0].contraction_ratio));
    const Vec2 mid(0.5, 0.5);
    // Checkerboard anchored at the cell of map 0 (smallest word).
    const Vec2 c0 = maps[0].apply(mid);
    const int par0 = static_cast<int>(std::floor(c0.x() * g)) + static_cast<int>(std::floor(c0.y() * g));
    const CarpetTable* table = nullptr;
    if (two) {
      if (g == 3) table = component == 0 ? &kSc3U : &kSc3V;
      else if (g == 4) table = component == 0 ? &kCarpet4U : &kCarpet4V;
      else throw InvalidInput("no two-dimensional pattern for a " + std::to_string(g) + "x" + std::to_string(g) + " grid");
    }
    for (std::size_t i = 0; i < maps.size(); ++i) {
      const Vec2 c = maps[i].apply(mid);
      const int col = static_cast<int>(std::floor(c.x() * g));
      const int row = static_cast<int>(std::floor(c.y() * g));
      if (two) {
        const std::string& s = (*table)[static_cast<std::size_t>(g - 1 - row)][static_cast<std::size_t>(col)];
        if (s.empty()) throw InvalidInput("pattern has no entry for a cell of the domain");
        pat.cells[i] = parse_entry(s);
      } else if (label == RepLabel::OnePP || label == RepLabel::OneMP) {
        pat.cells[i] = {0, 1};
      } else {
        pat.cells[i] = {0, ((col + row - par0) % 2 == 0) ? 1 : -1};
      }
    }
    return pat;
  }
  if (domain.preset == Preset::Octagasket) {
    if (label == RepLabel::Two) throw InvalidInput("octagasket two-dimensional labels are 2_1, 2_2, 2_3");
    for (std::size_t i = 0; i < maps.size(); ++i) {
      // The fixed point of F_i is the octagon vertex it belongs to.
      const Mat2 I = Mat2::Identity();
      const Vec2 q = (I - maps[i].linear).lu().solve(maps[i].translation);
      double ang = std::atan2(q.y(), q.x());
      const int k = static_cast<int>(((std::lround(ang / (kPi / 4)) % 8) + 8) % 8);
      if (label == RepLabel::Two1 || label == RepLabel::Two3) {
        pat.cells[i] = parse_entry((component == 0 ? kRing21U : kRing21V)[static_cast<std::size_t>(k)]);
      } else if (label == RepLabel::Two2) {
        pat.cells[i] = parse_entry((component == 0 ? kRing22U : kRing22V)[static_cast<std::size_t>(k)]);
      } else if (label == RepLabel::OnePP || label == RepLabel::OnePM) {
        pat.cells[i] = {0, 1};
      } else {
        pat.cells[i] = {0, k % 2 == 0 ? 1 : -1};
      }
    }
    return pat;
  }
  throw InvalidInput("no miniaturization recipe for preset " + preset_name(domain.preset));
}

std::vector<VectorXd> miniaturize(const std::vector<VectorXd>& basis, RepLabel label, const CellDomain& coarse_domain,
                                  const TriMesh& coarse_mesh, const CellDomain& fine_domain, const TriMesh& fine_mesh,
                                  double tol) {
  const int dim = label_dimension(label);
  if (static_cast<int>(basis.size()) != dim) throw InvalidInput("basis size does not match the label dimension");
  if (fine_domain.level != coarse_domain.level + 1) throw InvalidInput("miniaturize maps level m to level m+1");
  if (fine_domain.ifs.maps.size() != coarse_domain.ifs.maps.size()) throw InvalidInput("domains use different maps");
  for (const auto& b : basis) {
    if (b.size() != static_cast<Eigen::Index>(coarse_mesh.vertices.size())) {
      throw InvalidInput("basis vector length does not match the coarse mesh");
    }
  }
  const double ptol = 1e-9 * std::max(coarse_mesh.diameter(), 1e-300);
  PointIndex index(ptol);
  for (const auto& v : coarse_mesh.vertices) index.force_insert(v);
  std::vector<AffineMap> inv;
  for (const auto& f : fine_domain.ifs.maps) inv.push_back(f.inverse());

  double scale = 0.0;
  for (const auto& b : basis) scale = std::max(scale, b.cwiseAbs().maxCoeff());

  std::vector<VectorXd> out;
  // On the octagasket the two 2_1/2_3 tables give the same function up to sign; keep one.
  const int outputs = (label == RepLabel::Two1 || label == RepLabel::Two3) ? 1 : dim;
  for (int comp = 0; comp < outputs; ++comp) {
    const SignPattern pat = miniaturization_pattern(fine_domain, label, comp);
    const Eigen::Index nv = static_cast<Eigen::Index>(fine_mesh.vertices.size());
    VectorXd w = VectorXd::Zero(nv);
    std::vector<char> seen(static_cast<std::size_t>(nv), 0);
    double worst = 0.0;
    for (std::size_t t = 0; t < fine_mesh.triangles.size(); ++t) {
      const auto& word = fine_domain.cells.at(static_cast<std::size_t>(fine_mesh.cell_of_triangle[t])).word;
      if (word.empty()) throw InvalidInput("fine cell has an empty word");
      const int i = word[0];
      const PatternEntry e = pat.cells.at(static_cast<std::size_t>(i));
      for (int c = 0; c < 3; ++c) {
        const int p = fine_mesh.triangles[t][c];
        const long q = index.find(inv[static_cast<std::size_t>(i)].apply(fine_mesh.vertices[p]));
        if (q < 0) throw InvalidInput("fine mesh is not the union of the mapped coarse meshes");
        const double val = e.sign * basis[static_cast<std::size_t>(e.source)][q];
        if (seen[p]) {
          worst = std::max(worst, std::abs(w[p] - val));
        } else {
          w[p] = val;
          seen[p] = 1;
        }
      }
    }
    if (worst > tol * std::max(scale, 1e-300)) {
      throw InvalidInput("miniaturize: copies disagree at shared vertices (" + std::to_string(worst / scale) +
                         " relative); wrong label or basis");
    }
    out.push_back(std::move(w));
  }
  return out;
}

MiniaturizationCheck verify_miniaturization(const VectorXd& mini, double lambda, const SymmetricSparseMatrix& K,
                                            const SymmetricSparseMatrix& M, double contraction) {
  MiniaturizationCheck c;
  c.expected = 1.0 / (contraction * contraction);
  const double rq = rayleigh(mini, K, M);
  c.factor = lambda != 0.0 ? rq / lambda : 0.0;
  c.residual = residual(K, M, c.expected * lambda, mini);
  return c;
}

}  // namespace fraclap
