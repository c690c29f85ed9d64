#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fraclap/fem.hpp"
#include "fraclap/geometry.hpp"
#include "fraclap/spectral.hpp"
#include "fraclap/symmetry.hpp"

namespace fraclap {

using Json = nlohmann::json;

// Domain spec: {"preset": name, "params": {...}, "level": m} or
// {"ifs": [{"matrix": [[a,b],[c,d]], "translation": [tx,ty]}], "base": [[x,y],...], "level": m}
// or {"carpet": {"j":..,"k":[..],"levels":..,"seed":..}}.
Json domain_to_json(const CellDomain& domain);
CellDomain domain_from_json(const Json& j);

Json carpet_spec_to_json(const CarpetSpec& spec);
CarpetSpec carpet_spec_from_json(const Json& j);

Json spectrum_meta_to_json(const SpectrumMeta& meta);
SpectrumMeta spectrum_meta_from_json(const Json& j);

struct AnalysisReport {
  ClusterParams params;
  NormalizedSpectrum normalized;
  std::vector<Cluster> clusters;
  RenormEstimate R;                    // eigenvalue renormalization search
  std::optional<RenormEstimate> r;     // level-to-level factor, when a next-level spectrum is given
  std::optional<WeylReport> weyl;      // absent when fewer than 10 nonzero values
};

AnalysisReport analyze_spectrum(const std::vector<double>& values, const std::vector<double>* next_level,
                                const ClusterParams& params, const RSearchWindow& window = {}, int n_use = 10);
Json report_to_json(const AnalysisReport& report);

void write_weyl_csv(std::ostream& os, const WeylReport& weyl);

struct ClassifiedValue {
  int n = 0;  // 1-based index among the nonzero eigenvalues
  double value = 0.0;
  std::string label;
};
void write_classification_csv(std::ostream& os, const std::vector<ClassifiedValue>& rows);

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

struct TableOptions {
  bool normalized = false;  // divide each column by its first nonzero value
  bool ratios = false;      // append lambda^(m) / lambda^(m+1) columns for adjacent columns
  int rows = -1;            // < 0: as many rows as the longest column
};
// Levels as columns, n as rows; 4 decimals. Zero modes are dropped so row n is the n-th nonzero value.
std::string table_emit(const std::vector<std::string>& headers, const std::vector<std::vector<double>>& columns,
                       const TableOptions& options = {});

}  // namespace fraclap
