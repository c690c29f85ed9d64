#pragma once

#include <vector>

namespace fraclap {

struct RectangleMode {
  double value = 0.0;
  int n = 0;  // cos(pi n x / a)
  int k = 0;  // cos(pi k y / b)
};

// First `count` Neumann eigenvalues of [0,a] x [0,b], ascending.
std::vector<RectangleMode> rectangle_spectrum(double a, double b, int count);

// Truncated cosine series f(x) = sum_k a_k cos(pi k x) on [0,1].
struct CosineSeries {
  std::vector<double> a;
};

struct ExtensionEnergy {
  double E_m = 0.0;       // energy of the minimum energy extension to [0,1] x [0,2^-m]
  double E_I = 0.0;       // (1/2) sum (pi k)^2 a_k^2
  double scaled = 0.0;    // 2^m E_m
};
ExtensionEnergy extension_energy(const CosineSeries& f, int m);

struct NormalDerivativeLimit {
  std::vector<double> scaled;  // 2^m du_m/dy(x,0) for each requested m
  double limit = 0.0;          // -sum (pi k)^2 a_k cos(pi k x)
};
NormalDerivativeLimit normal_derivative_limit(const CosineSeries& f, double x, const std::vector<int>& ms);

double phi_minus(double t);

struct BigPhiResult {
  double value = 0.0;
  int iterations = 0;
};
BigPhiResult big_phi_detail(double t, double rel_tol = 1e-13);
double big_phi(double t, double rel_tol = 1e-13);

struct DecimationState {
  int m = 0;
  int j = 0;
  double t0 = 0.0;
  double phi = 0.0;
  int iterations = 0;
  double eigenvalue = 0.0;  // (3/2) 5^m Phi(t0)
};
DecimationState sg_row_decimation(int m, int j, double rel_tol = 1e-13);
double sg_row_eigenvalue(int m, int j, double rel_tol = 1e-13);

// Which apex sample the row eigenfunction uses: y_k = cos(pi j x_k) or cos(pi j x_{k-1}).
enum class ApexConvention { SameIndex, PreviousIndex };

struct RowEigenfunction {
  int m = 0;
  int j = 0;
  std::vector<double> x_values;  // at x_k = k 2^-m, k = 0..2^m
  std::vector<double> y_values;  // at y_k, k = 1..2^m (cell k has base x_{k-1} x_k)
};
RowEigenfunction sg_row_eigenfunction(int m, int j, ApexConvention conv = ApexConvention::SameIndex);

struct RowRelationFit {
  double constant = 0.0;  // c in -L u = c (2 - 2 cos(pi j/2^m)) u at interior points
  double spread = 0.0;    // max deviation of the pointwise ratio from c
};
// Averaged graph Laplacian of the bottom row of level-m cells:
// (L u)(p) = mean over neighbours q of u(q) - u(p). Fits the constant over interior points.
RowRelationFit sg_row_relation_fit(int m, int j, ApexConvention conv);

}  // namespace fraclap
