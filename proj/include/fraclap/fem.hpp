#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "fraclap/mesh.hpp"

namespace fraclap {

// Full symmetric storage (both triangles); symmetry holds by construction.
using SymmetricSparseMatrix = Eigen::SparseMatrix<double>;

struct AssembledSystem {
  SymmetricSparseMatrix K;  // stiffness, int grad u . grad v
  SymmetricSparseMatrix M;  // consistent mass, int u v
};

AssembledSystem assemble(const TriMesh& mesh);

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;  // M-normalized
  double residual = 0.0;
};

struct SpectrumMeta {
  std::string domain;
  int level = 0;
  int refinement = 0;
  double epsilon = 0.0;
  std::size_t vertex_count = 0;
  std::size_t triangle_count = 0;
};

struct Spectrum {
  SpectrumMeta meta;
  std::vector<EigenPair> pairs;  // ascending

  std::vector<double> values() const;
};

enum class SolverMethod { Auto, Dense, Lanczos };

struct SolveOptions {
  int nev = 10;
  double tol = 1e-9;
  SolverMethod method = SolverMethod::Auto;
  int dense_limit = 3000;   // Auto uses the dense path at or below this dimension
  int max_steps = 500;      // Lanczos steps per sweep
  std::uint64_t seed = 0x5EED;  // start vectors
};

Spectrum solve_lowest(const SymmetricSparseMatrix& K, const SymmetricSparseMatrix& M, const SolveOptions& opts);

double rayleigh(const Eigen::VectorXd& v, const SymmetricSparseMatrix& K, const SymmetricSparseMatrix& M);
double residual(const SymmetricSparseMatrix& K, const SymmetricSparseMatrix& M, double lambda,
                const Eigen::VectorXd& v);

// Flip v so that its first entry of largest magnitude is positive.
void normalize_sign(Eigen::VectorXd& v);

void write_spectrum_csv(std::ostream& os, const Spectrum& s);
Spectrum read_spectrum_csv(std::istream& is);
void write_vectors_csv(std::ostream& os, const TriMesh& mesh, const Spectrum& s, const std::vector<int>& indices);
// Returns one column per eigenvector index found in the file, in index order.
std::vector<std::pair<int, Eigen::VectorXd>> read_vectors_csv(std::istream& is, std::size_t vertex_count);

}  // namespace fraclap
