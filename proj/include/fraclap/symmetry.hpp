#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "fraclap/fem.hpp"
#include "fraclap/geometry.hpp"
#include "fraclap/mesh.hpp"

namespace fraclap {

// Dihedral group D_n acting on the plane about `center`.
// Elements 0..n-1 are rotations by 2 pi k / n; elements n..2n-1 are the
// reflections across the axis through the center at angle pi k / n.
struct DihedralGroup {
  int n = 4;
  Vec2 center = Vec2::Zero();
  std::vector<Mat2> linear;

  // Tagged reflections (element indices). For D8 these are the reflections in the D4 subgroup.
  int rho_H = -1;    // across the horizontal axis
  int rho_V = -1;    // across the vertical axis
  int rho_D1 = -1;   // rho'_D, across the anti-diagonal y = -x
  int rho_D2 = -1;   // rho''_D, across the diagonal y = x
  int rotation = 1;  // rotation by 2 pi / n

  static DihedralGroup make(int n, const Vec2& center);

  int size() const { return 2 * n; }
  bool is_reflection(int g) const { return g >= n; }
  // Axis reflections through the tagged D4 set, and the remaining ones (empty for D4).
  std::vector<int> d4_reflections() const;
  std::vector<int> other_reflections() const;

  Vec2 apply(int g, const Vec2& p) const { return center + linear[g] * (p - center); }
  int compose(int g, int h) const;  // g o h
  int inverse(int g) const;
  // Largest deviation found when checking closure, identity, inverses and involutions.
  double verify() const;
};

// Symmetry group of a preset domain: D4 for the square and the symmetric carpets, D8 for the octagasket.
DihedralGroup symmetry_group(const CellDomain& domain);

// perm[g][i] is the vertex that vertex i is carried to by element g.
struct VertexAction {
  std::vector<std::vector<int>> perm;

  // (g f)(p) = f(g^{-1} p).
  Eigen::VectorXd apply(int g, const Eigen::VectorXd& f) const;
};

// Throws InvalidInput when an image vertex or triangle is missing (asymmetric mesh).
VertexAction vertex_action(const DihedralGroup& group, const TriMesh& mesh, double tol = -1.0);

enum class RepLabel { OnePP, OnePM, OneMP, OneMM, Two, Two1, Two2, Two3 };

std::string label_name(RepLabel label);
RepLabel parse_label(const std::string& name);
int label_dimension(RepLabel label);

struct Classification {
  RepLabel label = RepLabel::OnePP;
  // Size 1: normalized <g u, u>_M per reflection g (index = element - n).
  std::vector<double> parity;
  // Size 2: trace of the element restricted to the cluster span (rotation for D8, rho_H for D4).
  double character = 0.0;
};

// One-dimensional labels read 1{a}{b}: for D4 a is the diagonal parity and b the
// horizontal/vertical parity; for D8 a is the parity under the reflections outside D4
// and b under those inside D4. Throws NumericalFailure on ambiguous parities.
Classification classify(const std::vector<Eigen::VectorXd>& cluster, const DihedralGroup& group,
                        const VertexAction& action, const SymmetricSparseMatrix& M);

// Rotates a two-dimensional cluster to the parity-adapted basis (u, v):
// D4 2: rho''_D u = -rho'_D u = u, v = rho_H u.
// D8: u is odd under the reflection across the axis at angle pi/8 (an edge axis);
// v is u rotated by pi/2 (2_1, 2_3) or by pi/4 (2_2).
std::vector<Eigen::VectorXd> adapt_basis(const std::vector<Eigen::VectorXd>& cluster, RepLabel label,
                                         const DihedralGroup& group, const VertexAction& action,
                                         const SymmetricSparseMatrix& M);

// Per first-level cell: which basis function is copied and with which sign.
struct PatternEntry {
  int source = 0;  // 0: u, 1: v
  int sign = 1;
};
struct SignPattern {
  std::vector<PatternEntry> cells;  // indexed by map index i of F_i
};

// component selects u_2 (0) or v_2 (1) for two-dimensional labels.
SignPattern miniaturization_pattern(const CellDomain& domain, RepLabel label, int component = 0);

// Copies the (adapted) basis cellwise under F_i^{-1} onto the level m+1 mesh.
// Returns one vector per label dimension, except a single vector for the octagasket 2_1/2_3.
// Throws InvalidInput when the copies disagree at a shared vertex by more than tol * max|u|.
std::vector<Eigen::VectorXd> miniaturize(const std::vector<Eigen::VectorXd>& basis, RepLabel label,
                                         const CellDomain& coarse_domain, const TriMesh& coarse_mesh,
                                         const CellDomain& fine_domain, const TriMesh& fine_mesh,
                                         double tol = 1e-8);

struct MiniaturizationCheck {
  double residual = 0.0;
  double factor = 0.0;    // rayleigh(mini) / lambda
  double expected = 0.0;  // contraction^-2
};
MiniaturizationCheck verify_miniaturization(const Eigen::VectorXd& mini, double lambda, const SymmetricSparseMatrix& K,
                                            const SymmetricSparseMatrix& M, double contraction);

}  // namespace fraclap
