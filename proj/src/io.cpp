#include "fraclap/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "fraclap/error.hpp"

namespace fraclap {

namespace {

Json vec_json(const Vec2& v) { return Json::array({v.x(), v.y()}); }

Vec2 json_vec(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("expected a point [x, y]");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

Json params_json(const PresetParams& p) {
  return Json{{"epsilon", p.epsilon}, {"height", p.height}, {"width", p.width}, {"rect_height", p.rect_height}};
}

PresetParams json_params(const Json& j) {
  PresetParams p;
  if (j.is_null()) return p;
  p.epsilon = j.value("epsilon", p.epsilon);
  p.height = j.value("height", p.height);
  p.width = j.value("width", p.width);
  p.rect_height = j.value("rect_height", p.rect_height);
  return p;
}

Json estimate_json(const RenormEstimate& e) {
  Json matches = Json::array();
  for (const auto& m : e.matches) {
    matches.push_back({{"source", m.source}, {"target", m.target}, {"predicted", m.predicted}, {"rel_err", m.rel_err}});
  }
  Json j{{"has_R", e.has_R}, {"score", e.score}, {"matches", matches}};
  if (e.has_R) {
    j["R_hat"] = e.R_hat;
    j["R_fit"] = e.R_fit;
    j["anchor_low"] = e.anchor_low;
    j["anchor_high"] = e.anchor_high;
    j["anchor_high_index"] = e.anchor_high_index;
  }
  return j;
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

Json carpet_spec_to_json(const CarpetSpec& spec) {
  Json j{{"j", spec.grid}, {"k", spec.removals_per_level}, {"levels", spec.levels}, {"seed", spec.seed}};
  if (!spec.level_seeds.empty()) j["level_seeds"] = spec.level_seeds;
  return j;
}

CarpetSpec carpet_spec_from_json(const Json& j) {
  try {
    CarpetSpec s;
    s.grid = j.at("j").get<int>();
    const Json& k = j.at("k");
    if (k.is_array()) {
      s.removals_per_level = k.get<std::vector<int>>();
    } else {
      s.removals_per_level = {k.get<int>()};
    }
    s.levels = j.at("levels").get<int>();
    s.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("level_seeds")) s.level_seeds = j.at("level_seeds").get<std::vector<std::uint64_t>>();
    s.validate();
    return s;
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("carpet spec: ") + e.what());
  }
}

Json domain_to_json(const CellDomain& d) {
  Json j;
  j["level"] = d.level;
  if (d.carpet) {
    j["carpet"] = carpet_spec_to_json(*d.carpet);
  } else if (d.preset != Preset::Custom) {
    j["preset"] = preset_name(d.preset);
    j["params"] = params_json(d.params);
  }
  Json maps = Json::array();
  for (const auto& f : d.ifs.maps) {
    maps.push_back({{"matrix", {{f.linear(0, 0), f.linear(0, 1)}, {f.linear(1, 0), f.linear(1, 1)}}},
                    {"translation", vec_json(f.translation)}});
  }
  j["ifs"] = maps;
  Json base = Json::array();
  for (const auto& p : d.base) base.push_back(vec_json(p));
  j["base"] = base;
  j["cell_count"] = d.cells.size();
  j["diameter"] = d.diameter();
  return j;
}

CellDomain domain_from_json(const Json& j) {
  try {
    if (j.contains("carpet")) {
      CarpetSpec s = carpet_spec_from_json(j.at("carpet"));
      if (j.contains("level")) {
        const int level = j.at("level").get<int>();
        if (level != s.levels) throw InvalidInput("carpet level does not match the spec's levels");
      }
      return random_carpet(s);
    }
    const int level = j.at("level").get<int>();
    if (level < 0) throw InvalidInput("level must be >= 0");
    if (j.contains("preset")) {
      return build_preset_domain(parse_preset(j.at("preset").get<std::string>()),
                                 json_params(j.contains("params") ? j.at("params") : Json()), level);
    }
    IteratedFunctionSystem ifs;
    ifs.name = "custom";
    for (const auto& m : j.at("ifs")) {
      const Json& a = m.at("matrix");
      Mat2 L;
      L << a.at(0).at(0).get<double>(), a.at(0).at(1).get<double>(), a.at(1).at(0).get<double>(),
          a.at(1).at(1).get<double>();
      const AffineMap f = AffineMap::similarity(L, json_vec(m.at("translation")));
      if (!f.is_similarity(1e-9)) throw InvalidInput("ifs maps must be similarities");
      if (!(f.contraction_ratio < 1.0)) throw InvalidInput("ifs maps must be contractions");
      ifs.maps.push_back(f);
    }
    Polygon base;
    for (const auto& p : j.at("base")) base.push_back(json_vec(p));
    return build_domain(ifs, base, level);
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("domain spec: ") + e.what());
  }
}

Json spectrum_meta_to_json(const SpectrumMeta& m) {
  return Json{{"domain", m.domain},
              {"level", m.level},
              {"refinement", m.refinement},
              {"epsilon", m.epsilon},
              {"vertex_count", m.vertex_count},
              {"triangle_count", m.triangle_count}};
}

SpectrumMeta spectrum_meta_from_json(const Json& j) {
  SpectrumMeta m;
  m.domain = j.value("domain", std::string());
  m.level = j.value("level", 0);
  m.refinement = j.value("refinement", 0);
  m.epsilon = j.value("epsilon", 0.0);
  m.vertex_count = j.value("vertex_count", std::size_t{0});
  m.triangle_count = j.value("triangle_count", std::size_t{0});
  return m;
}

AnalysisReport analyze_spectrum(const std::vector<double>& values, const std::vector<double>* next_level,
                                const ClusterParams& params, const RSearchWindow& window, int n_use) {
  params.validate();
  AnalysisReport rep;
  rep.params = params;
  rep.normalized = normalize(values);
  rep.clusters = cluster_multiplicities(rep.normalized.values, params);
  rep.R = estimate_R(rep.normalized, params, window);
  if (next_level) {
    // Use as many representatives as both spectra provide, capped at n_use.
    const auto count_reps = [&](const std::vector<double>& v) {
      const int z = count_zero_modes(v);
      std::vector<double> tail(v.begin() + z, v.end());
      return static_cast<int>(cluster_multiplicities(tail, params).size());
    };
    const int use = std::min({n_use, count_reps(values), count_reps(*next_level)});
    if (use >= 1) rep.r = estimate_r(values, *next_level, use, params);
  }
  if (rep.normalized.values.size() >= 10) rep.weyl = weyl(values);
  return rep;
}

Json report_to_json(const AnalysisReport& r) {
  Json clusters = Json::array();
  for (const auto& c : r.clusters) clusters.push_back({{"n", c.start + 1}, {"size", c.size}, {"value", c.value}});
  Json j{{"tau", r.params.tau},
         {"zero_modes", r.normalized.zero_count},
         {"lambda1", r.normalized.lambda1},
         {"normalized", r.normalized.values},
         {"clusters", clusters},
         {"R", estimate_json(r.R)}};
  if (r.r) j["r"] = {{"r_hat", r.r->r_hat}, {"ratios", r.r->ratios}};
  if (r.weyl) {
    Json samples = Json::array();
    for (const auto& s : r.weyl->samples) samples.push_back({s.x, s.N, s.W});
    j["weyl"] = {{"alpha", r.weyl->alpha},
                 {"intercept", r.weyl->intercept},
                 {"fit_first", r.weyl->fit_first},
                 {"fit_last", r.weyl->fit_last},
                 {"samples", samples}};
  }
  return j;
}

void write_weyl_csv(std::ostream& os, const WeylReport& w) {
  os << "x,N,W\n";
  os << std::setprecision(17);
  for (const auto& s : w.samples) os << s.x << ',' << s.N << ',' << s.W << '\n';
}

void write_classification_csv(std::ostream& os, const std::vector<ClassifiedValue>& rows) {
  os << "n,eigenvalue,label\n";
  os << std::setprecision(17);
  for (const auto& r : rows) os << r.n << ',' << r.value << ',' << r.label << '\n';
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw NumericalFailure("sha256 unavailable");
  }
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string table_emit(const std::vector<std::string>& headers, const std::vector<std::vector<double>>& columns,
                       const TableOptions& options) {
  if (headers.size() != columns.size()) throw InvalidInput("table: one header per column");
  std::vector<std::vector<double>> cols;
  for (const auto& c : columns) {
    std::vector<double> v = c;
    std::sort(v.begin(), v.end());
    const int z = v.empty() ? 0 : count_zero_modes(v);
    std::vector<double> tail(v.begin() + z, v.end());
    if (options.normalized && !tail.empty()) {
      const double first = tail[0];
      for (double& x : tail) x /= first;
    }
    cols.push_back(std::move(tail));
  }
  std::size_t rows = 0;
  for (const auto& c : cols) rows = std::max(rows, c.size());
  if (options.rows >= 0) rows = static_cast<std::size_t>(options.rows);

  std::ostringstream os;
  os << "n";
  for (const auto& h : headers) os << ',' << h;
  if (options.ratios) {
    for (std::size_t c = 0; c + 1 < cols.size(); ++c) os << ",ratio " << headers[c] << '/' << headers[c + 1];
  }
  os << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    os << r + 1;
    for (const auto& c : cols) os << ',' << (r < c.size() ? fixed4(c[r]) : std::string());
    if (options.ratios) {
      for (std::size_t c = 0; c + 1 < cols.size(); ++c) {
        os << ',';
        if (r < cols[c].size() && r < cols[c + 1].size() && cols[c + 1][r] != 0.0) {
          os << fixed4(cols[c][r] / cols[c + 1][r]);
        }
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace fraclap
