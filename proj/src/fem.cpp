#include "fraclap/fem.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "fraclap/error.hpp"

#include <lapacke.h>

namespace fraclap {

using Eigen::MatrixXd;
using Eigen::VectorXd;

AssembledSystem assemble(const TriMesh& mesh) {
  const int n = static_cast<int>(mesh.vertices.size());
  std::vector<Eigen::Triplet<double>> kt, mt;
  kt.reserve(mesh.triangles.size() * 9);
  mt.reserve(mesh.triangles.size() * 9);
  for (const auto& t : mesh.triangles) {
    const Vec2 p[3] = {mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]};
    // Edge opposite vertex i, rotated: gradients of barycentrics are e_i^perp / (2A).
    Vec2 e[3];
    for (int i = 0; i < 3; ++i) e[i] = p[(i + 2) % 3] - p[(i + 1) % 3];
    const double area = 0.5 * (e[2].x() * (-e[1].y()) - e[2].y() * (-e[1].x()));
    if (!(area > 0)) throw NumericalFailure("degenerate or inverted triangle in assembly");
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        kt.emplace_back(t[i], t[j], e[i].dot(e[j]) / (4.0 * area));
        mt.emplace_back(t[i], t[j], area / 12.0 * (i == j ? 2.0 : 1.0));
      }
    }
  }
  AssembledSystem sys;
  sys.K.resize(n, n);
  sys.M.resize(n, n);
  sys.K.setFromTriplets(kt.begin(), kt.end());
  sys.M.setFromTriplets(mt.begin(), mt.end());
  return sys;
}

std::vector<double> Spectrum::values() const {
  std::vector<double> v;
  v.reserve(pairs.size());
  for (const auto& p : pairs) v.push_back(p.value);
  return v;
}

double rayleigh(const VectorXd& v, const SymmetricSparseMatrix& K, const SymmetricSparseMatrix& M) {
  const double den = v.dot(M * v);
  if (!(den > 0)) throw InvalidInput("rayleigh: zero M-norm");
  return v.dot(K * v) / den;
}

double residual(const SymmetricSparseMatrix& K, const SymmetricSparseMatrix& M, double lambda, const VectorXd& v) {
  const VectorXd kv = K * v;
  const VectorXd mv = M * v;
  const double num = (kv - lambda * mv).norm();
  const double den = kv.norm() + std::abs(lambda) * mv.norm();
  // Below the rounding bound of the products the residual is indistinguishable from 0.
  const VectorXd va = v.cwiseAbs();
  const double floor = 32.0 * std::numeric_limits<double>::epsilon() *
                       ((K.cwiseAbs() * va).norm() + std::abs(lambda) * (M.cwiseAbs() * va).norm());
  if (num <= floor) return 0.0;
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

void normalize_sign(VectorXd& v) {
  if (v.size() == 0) return;
  const double big = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) >= big * (1.0 - 1e-8)) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

namespace {

void finish_pairs(Spectrum& s, const SymmetricSparseMatrix& K, const SymmetricSparseMatrix& M) {
  for (auto& p : s.pairs) {
    normalize_sign(p.vector);
    p.residual = residual(K, M, p.value, p.vector);
  }
}

Spectrum solve_dense(const SymmetricSparseMatrix& K, const SymmetricSparseMatrix& M, int nev) {
  // LAPACK dsygvx: Cholesky reduction of M, tridiagonalization, selected eigenpairs 1..nev.
  const lapack_int n = static_cast<lapack_int>(K.rows());
  MatrixXd Kd = MatrixXd(K);
  MatrixXd Md = MatrixXd(M);
  VectorXd w(n);
  MatrixXd Z(n, nev);
  std::vector<lapack_int> ifail(static_cast<std::size_t>(n));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsygvx(LAPACK_COL_MAJOR, 1, 'V', 'I', 'L', n, Kd.data(), n, Md.data(), n, 0.0,
                                         0.0, 1, nev, 0.0, &found, w.data(), Z.data(), n, ifail.data());
  if (info > n) throw NumericalFailure("mass matrix is not positive definite (info " + std::to_string(info) + ")");
  if (info != 0 || found != nev) throw NumericalFailure("dense generalized eigensolver failed");
  Spectrum s;
  for (int i = 0; i < nev; ++i) {
    EigenPair p;
    p.value = w[i];
    p.vector = Z.col(i);
    p.vector /= std::sqrt(p.vector.dot(M * p.vector));
    s.pairs.push_back(std::move(p));
  }
  return s;
}

// Shift-invert operator A = (K + delta M)^{-1} M, self-adjoint in the M inner product.
class ShiftInvert {
 public:
  ShiftInvert(const SymmetricSparseMatrix& K, const SymmetricSparseMatrix& M) : M_(M) {
    double lmax = 0.0;
    for (int i = 0; i < K.rows(); ++i) lmax = std::max(lmax, K.coeff(i, i) / M.coeff(i, i));
    delta_ = 1e-8 * std::max(lmax, 1e-300);
    SymmetricSparseMatrix S = K + delta_ * M;
    ldlt_.compute(S);
    if (ldlt_.info() != Eigen::Success) throw NumericalFailure("sparse LDLT factorization failed");
    if (ldlt_.vectorD().minCoeff() <= 0) throw NumericalFailure("shifted stiffness is not positive definite");
  }
  VectorXd apply(const VectorXd& q) const { return ldlt_.solve(M_ * q); }
  MatrixXd apply(const MatrixXd& q) const { return ldlt_.solve(M_ * q); }
  double to_lambda(double mu) const { return 1.0 / mu - delta_; }

 private:
  const SymmetricSparseMatrix& M_;
  Eigen::SimplicialLDLT<SymmetricSparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  double delta_ = 0.0;
};

VectorXd random_vector(Eigen::Index n, Xoshiro256ss& rng) {
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<double>(rng.next() >> 11) * 0x1.0p-53 - 0.5;
  return v;
}

struct Locked {
  MatrixXd Y;   // M-orthonormal columns
  MatrixXd MY;  // M * Y
  void deflate(VectorXd& w) const {
    if (Y.cols() > 0) w -= Y * (MY.transpose() * w);
  }
};

struct RitzSet {
  std::vector<double> lambda;
  MatrixXd X;
};

// One Lanczos sweep on the deflated operator. Stops once `want` Ritz pairs have
// converged contiguously from the bottom, or once the converged prefix passes `threshold`.
RitzSet lanczos_sweep(const ShiftInvert& op, const SymmetricSparseMatrix& M, const Locked& locked, int want,
                      double threshold, int max_steps, double inner_tol, Xoshiro256ss& rng) {
  const Eigen::Index n = M.rows();
  const Eigen::Index room = n - locked.Y.cols();
  RitzSet out;
  if (room <= 0) return out;
  const int steps_cap = static_cast<int>(std::min<Eigen::Index>(max_steps, room));
  MatrixXd Q(n, std::min(steps_cap, 64));
  std::vector<double> alpha, beta;
  auto fresh_start = [&](int k) {
    for (int attempt = 0; attempt < 5; ++attempt) {
      VectorXd q = random_vector(n, rng);
      for (int pass = 0; pass < 2; ++pass) {
        locked.deflate(q);
        if (k > 0) q -= Q.leftCols(k) * (Q.leftCols(k).transpose() * (M * q));
      }
      const double nq = std::sqrt(q.dot(M * q));
      if (nq > 1e-8) return VectorXd(q / nq);
    }
    return VectorXd();
  };
  VectorXd q = fresh_start(0);
  if (q.size() == 0) return out;

  int k = 0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> tes;
  int prefix = 0;
  bool done = false;
  while (k < steps_cap && !done) {
    if (k >= Q.cols()) Q.conservativeResize(Eigen::NoChange, std::min<Eigen::Index>(steps_cap, 2 * Q.cols()));
    Q.col(k) = q;
    VectorXd w = op.apply(q);
    locked.deflate(w);
    double a = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
      const VectorXd c = Q.leftCols(k + 1).transpose() * (M * w);
      w -= Q.leftCols(k + 1) * c;
      a += c[k];
    }
    locked.deflate(w);
    alpha.push_back(a);
    double b = std::sqrt(std::max(0.0, w.dot(M * w)));
    ++k;
    const bool exhausted = (k == steps_cap);
    const bool breakdown = b <= 1e-13 * std::abs(a) || b == 0.0;
    if ((k % 5 == 0) || exhausted || breakdown || k == want) {
      MatrixXd T = MatrixXd::Zero(k, k);
      for (int i = 0; i < k; ++i) T(i, i) = alpha[i];
      for (int i = 0; i + 1 < k; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
      tes.compute(T);
      // Largest mu first (smallest lambda).
      prefix = 0;
      for (int i = k - 1; i >= 0; --i) {
        const double mu = tes.eigenvalues()[i];
        const double est = (breakdown ? 0.0 : b) * std::abs(tes.eigenvectors()(k - 1, i));
        if (!(mu > 0) || est > inner_tol * mu) break;
        ++prefix;
        if (prefix >= want || op.to_lambda(mu) > threshold) {
          done = true;
          break;
        }
      }
      if (exhausted) done = true;
    }
    if (done) break;
    if (breakdown) {
      beta.push_back(0.0);
      q = fresh_start(k);
      if (q.size() == 0) {
        done = true;
        break;
      }
    } else {
      beta.push_back(b);
      q = w / b;
    }
  }
  if (prefix == 0) return out;
  MatrixXd S(k, prefix);
  for (int c = 0; c < prefix; ++c) {
    const int i = k - 1 - c;
    S.col(c) = tes.eigenvectors().col(i);
    out.lambda.push_back(op.to_lambda(tes.eigenvalues()[i]));
  }
  out.X = Q.leftCols(k) * S;
  return out;
}

// One inverse-iteration step on the block followed by Rayleigh-Ritz with (K, M).
void refine_block(const ShiftInvert& op, const SymmetricSparseMatrix& K, const SymmetricSparseMatrix& M,
                  MatrixXd& X, std::vector<double>& lambda) {
  MatrixXd Z = op.apply(X);
  const MatrixXd Kp = Z.transpose() * (K * Z);
  const MatrixXd Mp = Z.transpose() * (M * Z);
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(0.5 * (Kp + Kp.transpose()), 0.5 * (Mp + Mp.transpose()),
                                                        Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw NumericalFailure("Rayleigh-Ritz projection failed");
  X = Z * es.eigenvectors();
  lambda.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  for (Eigen::Index c = 0; c < X.cols(); ++c) X.col(c) /= std::sqrt(X.col(c).dot(M * X.col(c)));
}

Spectrum solve_lanczos(const SymmetricSparseMatrix& K, const SymmetricSparseMatrix& M, const SolveOptions& opts,
                       int nev) {
  const ShiftInvert op(K, M);
  Xoshiro256ss rng(opts.seed);
  const double inner_tol = std::min(1e-2 * opts.tol, 1e-11);
  // Large requests need a Krylov space of a few times nev.
  const int max_steps = std::max(opts.max_steps, 3 * nev);
  Locked locked;
  std::vector<double> lambdas;
  auto lock = [&](const RitzSet& rs, double limit) {
    std::vector<int> take;
    for (std::size_t i = 0; i < rs.lambda.size(); ++i) {
      if (rs.lambda[i] <= limit) take.push_back(static_cast<int>(i));
    }
    if (take.empty()) return false;
    const Eigen::Index old = locked.Y.cols();
    locked.Y.conservativeResize(M.rows(), old + static_cast<Eigen::Index>(take.size()));
    for (std::size_t t = 0; t < take.size(); ++t) {
      VectorXd x = rs.X.col(take[t]);
      for (int pass = 0; pass < 2; ++pass) {
        if (locked.Y.cols() > 0 && old + static_cast<Eigen::Index>(t) > 0) {
          const auto Yl = locked.Y.leftCols(old + static_cast<Eigen::Index>(t));
          x -= Yl * (Yl.transpose() * (M * x));
        }
      }
      x /= std::sqrt(x.dot(M * x));
      locked.Y.col(old + static_cast<Eigen::Index>(t)) = x;
      lambdas.push_back(rs.lambda[take[t]]);
    }
    locked.MY = M * locked.Y;
    return true;
  };

  RitzSet first = lanczos_sweep(op, M, locked, nev, std::numeric_limits<double>::infinity(), max_steps,
                                inner_tol, rng);
  if (static_cast<int>(first.lambda.size()) < nev) {
    throw NumericalFailure("Lanczos did not converge " + std::to_string(nev) + " eigenpairs within " +
                           std::to_string(max_steps) + " steps");
  }
  lock(first, std::numeric_limits<double>::infinity());
  // Further sweeps on the deflated operator pick up missing copies of multiple eigenvalues.
  for (int sweep = 0; sweep < 64; ++sweep) {
    std::vector<double> sorted = lambdas;
    std::sort(sorted.begin(), sorted.end());
    const double thr = sorted[static_cast<std::size_t>(nev - 1)];
    const double limit = thr + 1e-9 * std::abs(thr) + 1e-300;
    if (locked.Y.cols() >= M.rows()) break;
    RitzSet rs = lanczos_sweep(op, M, locked, nev, limit, max_steps, inner_tol, rng);
    if (!lock(rs, limit)) break;
  }

  // Keep the lowest values plus a small guard block, then polish.
  std::vector<int> order(lambdas.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return lambdas[a] < lambdas[b]; });
  const int keep = std::min<int>(static_cast<int>(order.size()), nev + std::max(2, nev / 5));
  MatrixXd X(M.rows(), keep);
  for (int c = 0; c < keep; ++c) X.col(c) = locked.Y.col(order[c]);
  std::vector<double> vals;
  refine_block(op, K, M, X, vals);

  Spectrum s;
  for (int i = 0; i < nev; ++i) {
    EigenPair p;
    p.value = vals[i];
    p.vector = X.col(i);
    s.pairs.push_back(std::move(p));
  }
  finish_pairs(s, K, M);
  for (int round = 0; round < 3; ++round) {
    double worst = 0.0;
    for (const auto& p : s.pairs) worst = std::max(worst, p.residual);
    if (worst <= opts.tol) break;
    refine_block(op, K, M, X, vals);
    for (int i = 0; i < nev; ++i) {
      s.pairs[i].value = vals[i];
      s.pairs[i].vector = X.col(i);
    }
    finish_pairs(s, K, M);
  }
  return s;
}

}  // namespace

Spectrum solve_lowest(const SymmetricSparseMatrix& K, const SymmetricSparseMatrix& M, const SolveOptions& opts) {
  if (opts.nev < 1) throw InvalidInput("nev must be >= 1");
  if (K.rows() != K.cols() || M.rows() != M.cols() || K.rows() != M.rows()) {
    throw InvalidInput("stiffness and mass dimensions differ");
  }
  if (K.rows() == 0) throw InvalidInput("empty system");
  const int nev = static_cast<int>(std::min<Eigen::Index>(opts.nev, K.rows()));
  bool dense = opts.method == SolverMethod::Dense ||
               (opts.method == SolverMethod::Auto && K.rows() <= opts.dense_limit);
  if (opts.method == SolverMethod::Lanczos && K.rows() <= nev + 1) dense = true;
  Spectrum s = dense ? solve_dense(K, M, nev) : solve_lanczos(K, M, opts, nev);
  if (dense) finish_pairs(s, K, M);
  if (!dense) {
    for (const auto& p : s.pairs) {
      if (!(p.residual <= opts.tol)) {
        throw NumericalFailure("Lanczos residual " + std::to_string(p.residual) + " above tolerance");
      }
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// CSV

void write_spectrum_csv(std::ostream& os, const Spectrum& s) {
  os << "n,eigenvalue,residual\n";
  os.precision(17);
  for (std::size_t i = 0; i < s.pairs.size(); ++i) {
    os << i << ',' << s.pairs[i].value << ',' << s.pairs[i].residual << '\n';
  }
}

Spectrum read_spectrum_csv(std::istream& is) {
  Spectrum s;
  std::string line;
  if (!std::getline(is, line)) throw InvalidInput("spectrum file is empty");
  if (line.rfind("n,eigenvalue", 0) != 0) throw InvalidInput("spectrum file: unexpected header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    EigenPair p;
    try {
      p.value = std::stod(b);
      p.residual = c.empty() ? 0.0 : std::stod(c);
    } catch (const std::exception&) {
      throw InvalidInput("spectrum file: bad row: " + line);
    }
    s.pairs.push_back(std::move(p));
  }
  return s;
}

void write_vectors_csv(std::ostream& os, const TriMesh& mesh, const Spectrum& s, const std::vector<int>& indices) {
  os << "n,vertex_index,x,y,value\n";
  os.precision(17);
  for (int n : indices) {
    if (n < 0 || n >= static_cast<int>(s.pairs.size())) throw InvalidInput("eigenvector index out of range");
    const auto& v = s.pairs[n].vector;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      os << n << ',' << i << ',' << mesh.vertices[i].x() << ',' << mesh.vertices[i].y() << ',' << v[i] << '\n';
    }
  }
}

std::vector<std::pair<int, VectorXd>> read_vectors_csv(std::istream& is, std::size_t vertex_count) {
  std::map<int, VectorXd> cols;
  std::string line;
  if (!std::getline(is, line) || line.rfind("n,vertex_index", 0) != 0) {
    throw InvalidInput("vector file: unexpected header");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f[5];
    for (auto& x : f) std::getline(ss, x, ',');
    int n, vi;
    double val;
    try {
      n = std::stoi(f[0]);
      vi = std::stoi(f[1]);
      val = std::stod(f[4]);
    } catch (const std::exception&) {
      throw InvalidInput("vector file: bad row: " + line);
    }
    if (vi < 0 || static_cast<std::size_t>(vi) >= vertex_count) throw InvalidInput("vector file: vertex out of range");
    auto it = cols.find(n);
    if (it == cols.end()) it = cols.emplace(n, VectorXd::Zero(static_cast<Eigen::Index>(vertex_count))).first;
    it->second[vi] = val;
  }
  return {cols.begin(), cols.end()};
}

}  // namespace fraclap
