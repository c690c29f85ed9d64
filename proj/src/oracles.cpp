#include "fraclap/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "fraclap/error.hpp"

namespace fraclap {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr int kPhiCap = 200;
}  // namespace

std::vector<RectangleMode> rectangle_spectrum(double a, double b, int count) {
  if (!(a > 0) || !(b > 0)) throw InvalidInput("rectangle sides must be positive");
  if (count <= 0) return {};
  // Double the cutoff until at least `count` modes lie below it.
  double cut = std::pow(kPi / std::max(a, b), 2) * 4.0;
  std::vector<RectangleMode> modes;
  while (true) {
    modes.clear();
    const int nmax = static_cast<int>(std::sqrt(cut) * a / kPi) + 1;
    const int kmax = static_cast<int>(std::sqrt(cut) * b / kPi) + 1;
    for (int n = 0; n <= nmax; ++n) {
      for (int k = 0; k <= kmax; ++k) {
        const double v = std::pow(kPi * n / a, 2) + std::pow(kPi * k / b, 2);
        if (v <= cut) modes.push_back({v, n, k});
      }
    }
    if (static_cast<int>(modes.size()) >= count) break;
    cut *= 2.0;
  }
  std::sort(modes.begin(), modes.end(), [](const RectangleMode& x, const RectangleMode& y) {
    if (x.value != y.value) return x.value < y.value;
    if (x.n != y.n) return x.n < y.n;
    return x.k < y.k;
  });
  modes.resize(static_cast<std::size_t>(count));
  return modes;
}

ExtensionEnergy extension_energy(const CosineSeries& f, int m) {
  ExtensionEnergy e;
  const double h = std::ldexp(1.0, -m);
  for (std::size_t k = 1; k < f.a.size(); ++k) {
    const double z = kPi * static_cast<double>(k) * h;
    const double c = std::cosh(z);
    e.E_m += f.a[k] * f.a[k] * kPi * static_cast<double>(k) * std::sinh(2.0 * z) / (4.0 * c * c);
    e.E_I += 0.5 * std::pow(kPi * static_cast<double>(k), 2) * f.a[k] * f.a[k];
  }
  e.scaled = std::ldexp(e.E_m, m);
  return e;
}

NormalDerivativeLimit normal_derivative_limit(const CosineSeries& f, double x, const std::vector<int>& ms) {
  NormalDerivativeLimit out;
  for (int m : ms) {
    const double h = std::ldexp(1.0, -m);
    double d = 0.0;
    for (std::size_t k = 1; k < f.a.size(); ++k) {
      const double w = kPi * static_cast<double>(k);
      d -= f.a[k] * w * std::tanh(w * h) * std::cos(w * x);
    }
    out.scaled.push_back(std::ldexp(d, m));
  }
  for (std::size_t k = 1; k < f.a.size(); ++k) {
    const double w = kPi * static_cast<double>(k);
    out.limit -= w * w * f.a[k] * std::cos(w * x);
  }
  return out;
}

double phi_minus(double t) {
  if (!(t <= 6.25)) throw InvalidInput("phi_minus: t must be <= 25/4");
  return 0.5 * (5.0 - std::sqrt(25.0 - 4.0 * t));
}

BigPhiResult big_phi_detail(double t, double rel_tol) {
  if (!(t >= 0.0) || !(t < 4.0)) throw InvalidInput("big_phi: t must lie in [0, 4)");
  BigPhiResult r;
  if (t == 0.0) return r;
  double s = t;
  double scale = 1.0;
  double prev = t;
  for (int n = 1; n <= kPhiCap; ++n) {
    // phi_minus(s) = 2s / (5 + sqrt(25 - 4s)) avoids cancellation for tiny s.
    s = 2.0 * s / (5.0 + std::sqrt(25.0 - 4.0 * s));
    scale *= 5.0;
    const double cur = scale * s;
    r.iterations = n;
    r.value = cur;
    if (std::abs(cur - prev) <= rel_tol * std::abs(cur)) return r;
    prev = cur;
  }
  throw NumericalFailure("big_phi: no convergence within the iteration cap");
}

double big_phi(double t, double rel_tol) { return big_phi_detail(t, rel_tol).value; }

DecimationState sg_row_decimation(int m, int j, double rel_tol) {
  if (m < 0 || j < 0 || j >= (1 << m)) throw InvalidInput("sg_row: need 0 <= j < 2^m");
  DecimationState st;
  st.m = m;
  st.j = j;
  if (j == 0) return st;
  const double theta = kPi * j / std::ldexp(1.0, m);
  // 2 - 2 cos(theta) = 4 sin^2(theta/2), stable for small theta.
  st.t0 = 4.0 * std::pow(std::sin(0.5 * theta), 2);
  const BigPhiResult r = big_phi_detail(st.t0, rel_tol);
  st.phi = r.value;
  st.iterations = r.iterations;
  st.eigenvalue = 1.5 * std::pow(5.0, m) * st.phi;
  return st;
}

double sg_row_eigenvalue(int m, int j, double rel_tol) { return sg_row_decimation(m, j, rel_tol).eigenvalue; }

RowEigenfunction sg_row_eigenfunction(int m, int j, ApexConvention conv) {
  if (m < 0 || j < 0 || j >= (1 << m)) throw InvalidInput("sg_row: need 0 <= j < 2^m");
  RowEigenfunction u;
  u.m = m;
  u.j = j;
  const int n = 1 << m;
  auto c = [&](int k) { return std::cos(kPi * j * static_cast<double>(k) / n); };
  for (int k = 0; k <= n; ++k) u.x_values.push_back(0.5 * (c(k) + c(k + 1)));
  for (int k = 1; k <= n; ++k) u.y_values.push_back(conv == ApexConvention::SameIndex ? c(k) : c(k - 1));
  return u;
}

RowRelationFit sg_row_relation_fit(int m, int j, ApexConvention conv) {
  if (j == 0) return {};
  const RowEigenfunction u = sg_row_eigenfunction(m, j, conv);
  const int n = 1 << m;
  const double t = 4.0 * std::pow(std::sin(0.5 * kPi * j / n), 2);
  std::vector<double> ratios;
  // Interior junctions x_k (k = 1..n-1): neighbours x_{k-1}, x_{k+1}, y_k, y_{k+1}.
  for (int k = 1; k < n; ++k) {
    const double lap = 0.25 * (u.x_values[k - 1] + u.x_values[k + 1] + u.y_values[k - 1] + u.y_values[k]) -
                       u.x_values[k];
    if (std::abs(u.x_values[k]) > 1e-9) ratios.push_back(-lap / (t * u.x_values[k]));
  }
  // Apex points y_k: neighbours x_{k-1}, x_k.
  for (int k = 1; k <= n; ++k) {
    const double lap = 0.5 * (u.x_values[k - 1] + u.x_values[k]) - u.y_values[k - 1];
    if (std::abs(u.y_values[k - 1]) > 1e-9) ratios.push_back(-lap / (t * u.y_values[k - 1]));
  }
  RowRelationFit fit;
  if (ratios.empty()) return fit;
  double sum = 0.0;
  for (double r : ratios) sum += r;
  fit.constant = sum / static_cast<double>(ratios.size());
  for (double r : ratios) fit.spread = std::max(fit.spread, std::abs(r - fit.constant));
  return fit;
}

}  // namespace fraclap
