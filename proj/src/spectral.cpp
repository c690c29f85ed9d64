#include "fraclap/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fraclap/error.hpp"

namespace fraclap {

namespace {

double auto_zero_tol(const std::vector<double>& values, double zero_tol) {
  if (zero_tol >= 0) return zero_tol;
  double big = 0.0;
  for (double v : values) big = std::max(big, std::abs(v));
  return 1e-8 * big;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> nonzero_reps(const std::vector<double>& values, const ClusterParams& params) {
  const int z = count_zero_modes(values);
  std::vector<double> tail(values.begin() + z, values.end());
  std::vector<double> reps;
  for (const auto& c : cluster_multiplicities(tail, params)) reps.push_back(c.value);
  return reps;
}

}  // namespace

int count_zero_modes(const std::vector<double>& values, double zero_tol) {
  const double tol = auto_zero_tol(values, zero_tol);
  int z = 0;
  while (z < static_cast<int>(values.size()) && values[z] <= tol) ++z;
  return z;
}

NormalizedSpectrum normalize(const std::vector<double>& values, double zero_tol) {
  if (values.size() < 2) throw InvalidInput("normalize: need at least two eigenvalues");
  NormalizedSpectrum out;
  out.zero_count = count_zero_modes(values, zero_tol);
  if (out.zero_count >= static_cast<int>(values.size())) throw InvalidInput("normalize: no nonzero eigenvalue");
  out.lambda1 = values[out.zero_count];
  for (std::size_t i = out.zero_count; i < values.size(); ++i) out.values.push_back(values[i] / out.lambda1);
  out.values[0] = 1.0;
  return out;
}

NormalizedSpectrum normalize(const Spectrum& spectrum, double zero_tol) { return normalize(spectrum.values(), zero_tol); }

void ClusterParams::validate() const {
  if (!(tau > 0.0) || !(tau < 1.0)) throw InvalidInput("tau must lie in (0, 1)");
}

std::vector<Cluster> cluster_multiplicities(const std::vector<double>& values, const ClusterParams& params) {
  params.validate();
  std::vector<Cluster> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const bool join = i > 0 && values[i] != 0.0 && (values[i] - values[i - 1]) / values[i] < params.tau;
    const bool both_zero = i > 0 && values[i] == 0.0 && values[i - 1] == 0.0;
    if (join || both_zero) {
      Cluster& c = out.back();
      c.value = (c.value * c.size + values[i]) / (c.size + 1);
      ++c.size;
    } else {
      out.push_back(Cluster{static_cast<int>(i), 1, values[i]});
    }
  }
  return out;
}

RenormEstimate estimate_r(const std::vector<double>& spec_m, const std::vector<double>& spec_m1, int n_use,
                          const ClusterParams& params) {
  if (n_use < 1) throw InvalidInput("estimate_r: n_use must be >= 1");
  const auto a = nonzero_reps(spec_m, params);
  const auto b = nonzero_reps(spec_m1, params);
  if (static_cast<int>(a.size()) < n_use || static_cast<int>(b.size()) < n_use) {
    throw InvalidInput("estimate_r: insufficient eigenvalues for n_use");
  }
  RenormEstimate est;
  for (int i = 0; i < n_use; ++i) est.ratios.push_back(a[i] / b[i]);
  est.r_hat = median(est.ratios);
  return est;
}

RenormEstimate estimate_R(const NormalizedSpectrum& norm, const ClusterParams& params, const RSearchWindow& window) {
  RenormEstimate best;
  const auto clusters = cluster_multiplicities(norm.values, params);
  std::vector<double> reps;
  for (const auto& c : clusters) reps.push_back(c.value);
  if (reps.size() < 2) return best;
  const double tol = window.match_tol > 0 ? window.match_tol : params.tau;
  const double top = reps.back();

  auto nearest = [&](double y) {
    auto it = std::lower_bound(reps.begin(), reps.end(), y);
    double d = std::numeric_limits<double>::infinity();
    double hit = 0.0;
    if (it != reps.end() && std::abs(*it - y) < d) { d = std::abs(*it - y); hit = *it; }
    if (it != reps.begin() && std::abs(*(it - 1) - y) < d) { d = std::abs(*(it - 1) - y); hit = *(it - 1); }
    return hit;
  };

  // Matches the run of low representatives under `ratio`; returns prefix length and total.
  auto score_ratio = [&](double ratio, std::vector<RatioMatch>& matches, int& prefix, int& total) {
    matches.clear();
    prefix = total = 0;
    bool run = true;
    for (double x : reps) {
      const double y = ratio * x;
      if (y > top * (1.0 + tol)) break;
      const double hit = nearest(y);
      const double err = std::abs(hit - y) / hit;
      if (err < tol) {
        ++total;
        if (run) ++prefix;
        matches.push_back({x, hit, y, err});
      } else {
        run = false;
      }
    }
  };

  int best_total = -1;
  for (std::size_t ia = 0; ia < reps.size(); ++ia) {
    for (std::size_t ib = ia + 1; ib < reps.size(); ++ib) {
      const double anchor = reps[ib] / reps[ia];
      if (anchor < window.lo || anchor > window.hi) continue;
      // Score: the run of consecutive low representatives whose image is again a representative.
      // The ratio is re-fitted (geometric mean over the run) so that FEM drift in a single
      // anchor does not cut the run short.
      std::vector<RatioMatch> matches;
      int prefix = 0, total = 0;
      double ratio = anchor;
      score_ratio(ratio, matches, prefix, total);
      for (int it = 0; it < 4 && prefix > 0; ++it) {
        double lsum = 0.0;
        for (int i = 0; i < prefix; ++i) lsum += std::log(matches[i].target / matches[i].source);
        const double fitted = std::exp(lsum / prefix);
        std::vector<RatioMatch> m2;
        int p2 = 0, t2 = 0;
        score_ratio(fitted, m2, p2, t2);
        if (p2 < prefix || (p2 == prefix && t2 <= total)) break;
        ratio = fitted;
        matches = std::move(m2);
        prefix = p2;
        total = t2;
      }
      // Ties go to the lowest anchor pair.
      const bool better = prefix > best.score || (prefix == best.score && total > best_total);
      if (better) {
        best.score = prefix;
        best_total = total;
        best.R_hat = anchor;
        best.R_fit = ratio;
        best.anchor_low = static_cast<int>(ia);
        best.anchor_high = static_cast<int>(ib);
        best.anchor_high_index = clusters[ib].start + 1;
        best.matches = std::move(matches);
      }
    }
  }
  best.has_R = best.score >= window.min_score;
  if (!best.has_R) {
    best.R_hat = best.R_fit = 0.0;
    best.anchor_low = best.anchor_high = best.anchor_high_index = -1;
  }
  return best;
}

WeylReport weyl(const std::vector<double>& values, double zero_tol, int fit_first, int fit_last) {
  std::vector<double> v = values;
  std::sort(v.begin(), v.end());
  const int z = count_zero_modes(v, zero_tol);
  const int nonzero = static_cast<int>(v.size()) - z;
  if (nonzero < 10) throw InvalidInput("weyl: need at least 10 nonzero eigenvalues");
  WeylReport rep;
  // N(x) counts the nonzero eigenvalues <= x (right-continuous); zero modes are left out.
  std::vector<int> N(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    N[i] = static_cast<int>(std::upper_bound(v.begin(), v.end(), v[i]) - v.begin()) - z;
  }
  rep.fit_first = std::max(0, fit_first);
  rep.fit_last = fit_last < 0 ? nonzero - 1 : std::min(fit_last, nonzero - 1);
  if (rep.fit_last - rep.fit_first < 1) throw InvalidInput("weyl: fit range too short");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int i = rep.fit_first; i <= rep.fit_last; ++i) {
    const double x = std::log(v[z + i]);
    const double y = std::log(static_cast<double>(N[z + i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  const double den = cnt * sxx - sx * sx;
  if (!(std::abs(den) > 1e-14 * std::max(1.0, cnt * sxx))) throw InvalidInput("weyl: degenerate fit");
  rep.alpha = (cnt * sxy - sx * sy) / den;
  rep.intercept = (sy - rep.alpha * sx) / cnt;
  for (int i = 0; i < nonzero; ++i) {
    const double x = v[z + i];
    rep.samples.push_back({x, N[z + i], N[z + i] / std::pow(x, rep.alpha)});
  }
  return rep;
}

}  // namespace fraclap
