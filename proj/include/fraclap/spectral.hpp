#pragma once

#include <optional>
#include <vector>

#include "fraclap/fem.hpp"

namespace fraclap {

struct NormalizedSpectrum {
  std::vector<double> values;  // lambda_n / lambda_1 for the nonzero part; values[0] == 1
  int zero_count = 0;
  double lambda1 = 0.0;
};

// zero_tol < 0 selects 1e-8 * max|lambda|. Leading values at or below zero_tol are zero modes.
NormalizedSpectrum normalize(const std::vector<double>& values, double zero_tol = -1.0);
NormalizedSpectrum normalize(const Spectrum& spectrum, double zero_tol = -1.0);
int count_zero_modes(const std::vector<double>& values, double zero_tol = -1.0);

struct ClusterParams {
  double tau = 5e-3;
  void validate() const;
};

struct Cluster {
  int start = 0;
  int size = 0;
  double value = 0.0;  // mean of members
};

std::vector<Cluster> cluster_multiplicities(const std::vector<double>& values, const ClusterParams& params);

struct RatioMatch {
  double source = 0.0;     // representative x
  double target = 0.0;     // partner y
  double predicted = 0.0;  // ratio * x
  double rel_err = 0.0;    // |y - ratio x| / y
};

struct RenormEstimate {
  // level-to-level factor
  double r_hat = 0.0;
  std::vector<double> ratios;  // lambda^(m) / lambda^(m+1) per cluster representative
  // eigenvalue renormalization factor
  bool has_R = false;
  double R_hat = 0.0;  // ratio of the anchor pair
  double R_fit = 0.0;  // geometric-mean ratio over the matched run
  int anchor_low = -1;   // cluster index of the anchor pair (0-based among nonzero clusters)
  int anchor_high = -1;
  int anchor_high_index = -1;  // normalized index n (1-based) of the first member of the high anchor cluster
  int score = 0;
  std::vector<RatioMatch> matches;
};

// Median of per-cluster ratios over the first n_use nonzero cluster representatives.
RenormEstimate estimate_r(const std::vector<double>& spec_m, const std::vector<double>& spec_m1, int n_use,
                          const ClusterParams& params = {});

struct RSearchWindow {
  double lo = 2.0;
  double hi = 100.0;
  double match_tol = -1.0;  // relative partner tolerance; < 0 uses tau
  int min_score = 3;
};

RenormEstimate estimate_R(const NormalizedSpectrum& norm, const ClusterParams& params = {},
                          const RSearchWindow& window = {});

struct WeylSample {
  double x = 0.0;
  int N = 0;
  double W = 0.0;
};

struct WeylReport {
  double alpha = 0.0;
  double intercept = 0.0;  // log N ~ intercept + alpha log x
  std::vector<WeylSample> samples;
  int fit_first = 0;  // indices into the nonzero values used by the fit
  int fit_last = 0;
};

// fit_first/fit_last trim the nonzero values used in the fit (fit_last < 0: through the end).
WeylReport weyl(const std::vector<double>& values, double zero_tol = -1.0, int fit_first = 0, int fit_last = -1);

}  // namespace fraclap
