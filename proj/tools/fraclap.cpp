// fraclap: domain -> mesh -> solve -> analyze front end.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "fraclap/error.hpp"
#include "fraclap/fem.hpp"
#include "fraclap/geometry.hpp"
#include "fraclap/io.hpp"
#include "fraclap/mesh.hpp"
#include "fraclap/oracles.hpp"
#include "fraclap/spectral.hpp"
#include "fraclap/symmetry.hpp"

namespace fs = std::filesystem;
using namespace fraclap;

namespace {

constexpr const char* kVersion = "fraclap 1.0.0";

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(slurp(path));
  } catch (const Json::parse_error& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw InvalidInput("write failed: " + path);
}

std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

TriMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path);
  return read_off(in);
}

Spectrum load_spectrum(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path);
  return read_spectrum_csv(in);
}

SolverMethod parse_method(const std::string& s) {
  if (s == "auto") return SolverMethod::Auto;
  if (s == "dense") return SolverMethod::Dense;
  if (s == "lanczos") return SolverMethod::Lanczos;
  throw InvalidInput("unknown solver method: " + s);
}

// Sidecar path: spec.csv -> spec.json.
std::string sidecar_path(const std::string& csv) { return fs::path(csv).replace_extension(".json").string(); }

// Overlapping presets need a grid that lines up across cells.
int mesh_subdivision(const CellDomain& d, int requested) {
  if (d.preset == Preset::Sawtooth || d.preset == Preset::SgTriangle) {
    return aligned_subdivision(d.preset, d.params, requested);
  }
  return requested;
}

TriMesh build_mesh(const CellDomain& d, int subdiv, int refinements) {
  return refine(triangulate(d, mesh_subdivision(d, subdiv)), refinements);
}

Json solve_sidecar(const Spectrum& s, const SolveOptions& o) {
  double worst = 0.0;
  for (const auto& p : s.pairs) worst = std::max(worst, p.residual);
  Json j = spectrum_meta_to_json(s.meta);
  j["nev"] = o.nev;
  j["tol"] = o.tol;
  j["max_residual"] = worst;
  return j;
}

DihedralGroup group_for_mesh(const std::string& name, const TriMesh& mesh) {
  Vec2 lo = mesh.vertices.at(0), hi = lo;
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const Vec2 center = 0.5 * (lo + hi);
  if (name == "d4") return DihedralGroup::make(4, center);
  if (name == "d8") return DihedralGroup::make(8, center);
  throw InvalidInput("unknown group: " + name + " (d4 or d8)");
}

std::vector<ClassifiedValue> classify_spectrum(const Spectrum& s, const std::vector<Eigen::VectorXd>& vectors,
                                               const DihedralGroup& G, const VertexAction& action,
                                               const SymmetricSparseMatrix& M, double tau, int limit) {
  const auto values = s.values();
  const int z = count_zero_modes(values);
  std::vector<double> tail(values.begin() + z, values.end());
  ClusterParams cp;
  cp.tau = tau;
  std::vector<ClassifiedValue> rows;
  for (const auto& c : cluster_multiplicities(tail, cp)) {
    if (limit > 0 && c.start >= limit) break;
    std::vector<Eigen::VectorXd> W;
    for (int i = 0; i < c.size; ++i) W.push_back(vectors.at(z + c.start + i));
    const auto cls = classify(W, G, action, M);
    for (int i = 0; i < c.size; ++i) {
      if (limit > 0 && c.start + i >= limit) break;
      rows.push_back({c.start + i + 1, tail[c.start + i], label_name(cls.label)});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// pipeline

struct PipelineConfig {
  Json domain;  // domain spec without level (preset+params or carpet)
  std::vector<int> levels;
  std::vector<int> refinements{0};
  int subdiv = 1;
  int nev = 20;
  double tol = 1e-9;
  double tau = 5e-3;
  bool oracle = false;
  bool normalized = false;
  bool ratios = true;
  std::string out_dir = "fraclap_out";
};

PipelineConfig parse_config(const Json& j) {
  PipelineConfig c;
  try {
    if (j.contains("carpet")) {
      c.domain = Json{{"carpet", j.at("carpet")}};
    } else if (j.contains("preset")) {
      c.domain = Json{{"preset", j.at("preset")}};
      if (j.contains("params")) c.domain["params"] = j.at("params");
    } else if (j.contains("ifs")) {
      c.domain = Json{{"ifs", j.at("ifs")}, {"base", j.at("base")}};
    } else {
      throw InvalidInput("config needs a preset, carpet or ifs");
    }
    c.levels = j.at("levels").get<std::vector<int>>();
    if (j.contains("refinements")) c.refinements = j.at("refinements").get<std::vector<int>>();
    c.subdiv = j.value("subdiv", c.subdiv);
    c.nev = j.value("nev", c.nev);
    c.tol = j.value("tol", c.tol);
    c.tau = j.value("tau", c.tau);
    c.oracle = j.value("oracle", c.oracle);
    c.normalized = j.value("normalized", c.normalized);
    c.ratios = j.value("ratios", c.ratios);
    c.out_dir = j.value("out_dir", c.out_dir);
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  if (c.levels.empty()) throw InvalidInput("config: levels list is empty");
  if (c.refinements.empty()) throw InvalidInput("config: refinements list is empty");
  if (c.nev < 1) throw InvalidInput("config: nev must be >= 1");
  if (c.subdiv < 1) throw InvalidInput("config: subdiv must be >= 1");
  for (int l : c.levels) {
    if (l < 0) throw InvalidInput("config: levels must be >= 0");
  }
  for (int r : c.refinements) {
    if (r < 0) throw InvalidInput("config: refinements must be >= 0");
  }
  if (c.oracle) {
    const bool square = c.domain.contains("preset") &&
                        parse_preset(c.domain.at("preset").get<std::string>()) == Preset::IntervalSquare;
    if (!square) throw InvalidInput("config: the oracle path exists only for interval_square");
  }
  ClusterParams{c.tau}.validate();
  return c;
}

Json config_to_json(const PipelineConfig& c) {
  Json j = c.domain;
  j["levels"] = c.levels;
  j["refinements"] = c.refinements;
  j["subdiv"] = c.subdiv;
  j["nev"] = c.nev;
  j["tol"] = c.tol;
  j["tau"] = c.tau;
  j["oracle"] = c.oracle;
  j["normalized"] = c.normalized;
  j["ratios"] = c.ratios;
  j["out_dir"] = c.out_dir;
  return j;
}

struct JobResult {
  int level = 0;
  int refinement = 0;
  std::string domain_json;
  std::string mesh_off;  // empty on the oracle path
  Spectrum spectrum;
  Json sidecar;
};

JobResult run_job(const PipelineConfig& c, int level, int refinement) {
  JobResult r;
  r.level = level;
  r.refinement = refinement;
  Json dj = c.domain;
  dj["level"] = level;
  if (dj.contains("carpet")) {
    // Per-level lists in the config describe the deepest level; shallower jobs use their prefix.
    Json& cj = dj["carpet"];
    cj["levels"] = level;
    for (const char* key : {"k", "level_seeds"}) {
      if (cj.contains(key) && cj[key].is_array() && cj[key].size() > 1) {
        if (static_cast<int>(cj[key].size()) < level) throw InvalidInput(std::string("carpet: ") + key + " is shorter than the level");
        Json cut = Json::array();
        for (int i = 0; i < level; ++i) cut.push_back(cj[key][i]);
        cj[key] = cut;
      }
    }
  }
  const CellDomain d = domain_from_json(dj);
  r.domain_json = json_text(domain_to_json(d));
  SolveOptions o;
  o.nev = c.nev;
  o.tol = c.tol;
  if (c.oracle) {
    // Level m is [0,1] x [0,2^-m]; keep the modes constant across the strip, (pi n)^2,
    // which are the ones approximating the interval.
    for (int count = 2 * c.nev;; count *= 2) {
      r.spectrum.pairs.clear();
      for (const auto& m : rectangle_spectrum(1.0, std::ldexp(1.0, -level), count)) {
        if (m.k == 0 && static_cast<int>(r.spectrum.pairs.size()) < c.nev) r.spectrum.pairs.push_back({m.value, {}, 0.0});
      }
      if (static_cast<int>(r.spectrum.pairs.size()) == c.nev) break;
    }
    r.spectrum.meta.domain = "interval_square (oracle)";
    r.spectrum.meta.level = level;
  } else {
    const TriMesh mesh = build_mesh(d, c.subdiv, refinement);
    std::ostringstream off;
    write_off(off, mesh);
    r.mesh_off = off.str();
    const auto sys = assemble(mesh);
    r.spectrum = solve_lowest(sys.K, sys.M, o);
    r.spectrum.meta.domain = d.carpet ? std::string("random_carpet") : preset_name(d.preset);
    r.spectrum.meta.level = level;
    r.spectrum.meta.refinement = refinement;
    r.spectrum.meta.epsilon = d.params.epsilon;
    r.spectrum.meta.vertex_count = mesh.vertices.size();
    r.spectrum.meta.triangle_count = mesh.triangles.size();
  }
  r.sidecar = solve_sidecar(r.spectrum, o);
  return r;
}

int thread_cap() {
  int cap = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("FRACLAP_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) cap = v;
    } catch (const std::exception&) {
      throw InvalidInput("FRACLAP_THREADS must be a positive integer");
    }
  }
  return cap;
}

std::vector<JobResult> run_pool(const PipelineConfig& c) {
  std::vector<std::pair<int, int>> jobs;
  for (int l : c.levels) {
    for (int r : c.refinements) jobs.emplace_back(l, r);
  }
  std::vector<std::optional<JobResult>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex fail_mutex;
  const int workers = std::min<int>(thread_cap(), static_cast<int>(jobs.size()));
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      {
        std::lock_guard<std::mutex> lock(fail_mutex);
        if (failure) return;
      }
      try {
        results[i] = run_job(c, jobs[i].first, jobs[i].second);
      } catch (...) {
        std::lock_guard<std::mutex> lock(fail_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  std::vector<JobResult> out;
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

// Tracks files written by this run so they can be removed when a later stage fails.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {}

  void begin() {
    if (!fs::exists(dir_)) {
      fs::create_directories(dir_);
      created_dir_ = true;
    }
  }

  std::string write(const std::string& rel, const std::string& text) {
    const fs::path p = dir_ / rel;
    if (p.has_parent_path() && !fs::exists(p.parent_path())) {
      fs::create_directories(p.parent_path());
      dirs_.push_back(p.parent_path());
    }
    written_.push_back(p);
    write_text(p.string(), text);
    return p.string();
  }

  const std::vector<fs::path>& written() const { return written_; }

  void rollback() {
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
    for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) fs::remove(*it, ec);
    if (created_dir_) fs::remove(dir_, ec);
    written_.clear();
  }

 private:
  fs::path dir_;
  bool created_dir_ = false;
  std::vector<fs::path> written_;
  std::vector<fs::path> dirs_;
};

std::string job_dir(int level, int refinement) {
  return "level" + std::to_string(level) + "_ref" + std::to_string(refinement);
}

Json run_pipeline(const PipelineConfig& c, const std::string& command_line) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<JobResult> results = run_pool(c);

  // Analysis is cheap and runs on the writer thread in job order.
  ClusterParams cp;
  cp.tau = c.tau;
  Json report;
  report["tau"] = c.tau;
  report["jobs"] = Json::array();
  std::map<int, std::vector<const JobResult*>> by_ref;
  for (const auto& r : results) by_ref[r.refinement].push_back(&r);
  for (const auto& r : results) {
    const AnalysisReport a = analyze_spectrum(r.spectrum.values(), nullptr, cp);
    report["jobs"].push_back({{"level", r.level}, {"refinement", r.refinement}, {"analysis", report_to_json(a)}});
  }
  Json cross = Json::array();
  for (auto& [ref, list] : by_ref) {
    std::sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->level < b->level; });
    for (std::size_t i = 0; i + 1 < list.size(); ++i) {
      const auto a = list[i]->spectrum.values();
      const auto b = list[i + 1]->spectrum.values();
      const AnalysisReport rep = analyze_spectrum(a, &b, cp);
      if (!rep.r) continue;
      cross.push_back({{"refinement", ref},
                       {"level", list[i]->level},
                       {"next_level", list[i + 1]->level},
                       {"r_hat", rep.r->r_hat},
                       {"ratios", rep.r->ratios}});
    }
  }
  report["level_ratios"] = cross;

  ArtifactWriter w(c.out_dir);
  Json outputs = Json::array();
  try {
    w.begin();
    for (const auto& r : results) {
      const std::string dir = job_dir(r.level, r.refinement);
      w.write(dir + "/domain.json", r.domain_json);
      if (!r.mesh_off.empty()) w.write(dir + "/mesh.off", r.mesh_off);
      std::ostringstream spec;
      write_spectrum_csv(spec, r.spectrum);
      w.write(dir + "/spec.csv", spec.str());
      w.write(dir + "/spec.json", json_text(r.sidecar));
      const auto values = r.spectrum.values();
      if (static_cast<int>(values.size()) - count_zero_modes(values) >= 10) {
        std::ostringstream wc;
        write_weyl_csv(wc, weyl(values));
        w.write(dir + "/weyl.csv", wc.str());
      }
    }
    w.write("report.json", json_text(report));
    for (auto& [ref, list] : by_ref) {
      std::vector<std::string> headers;
      std::vector<std::vector<double>> columns;
      for (const auto* r : list) {
        headers.push_back("level" + std::to_string(r->level));
        columns.push_back(r->spectrum.values());
      }
      TableOptions to;
      to.normalized = c.normalized;
      to.ratios = c.ratios;
      w.write("table_ref" + std::to_string(ref) + ".csv", table_emit(headers, columns, to));
    }
    for (const auto& p : w.written()) {
      outputs.push_back({{"path", fs::relative(p, c.out_dir).generic_string()}, {"sha256", sha256_file(p.string())}});
    }
    Json seeds = Json::array();
    if (c.domain.contains("carpet")) seeds.push_back(c.domain.at("carpet").value("seed", std::uint64_t{1}));
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Json manifest{{"command_line", command_line},
                  {"config", config_to_json(c)},
                  {"seeds", seeds},
                  {"versions", {{"fraclap", kVersion}, {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                                                   std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                                                   std::to_string(EIGEN_MINOR_VERSION)}}},
                  {"outputs", outputs},
                  {"wall_time_s", wall}};
    w.write("manifest.json", json_text(manifest));
    return manifest;
  } catch (...) {
    w.rollback();
    throw;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-element spectra of fractal outer approximations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::string command_line;
  for (int i = 0; i < argc; ++i) command_line += (i ? " " : "") + std::string(argv[i]);

  // domain
  auto* domain_cmd = app.add_subcommand("domain", "Build a level-m domain and write its JSON spec");
  std::string d_preset, d_out;
  PresetParams d_params;
  int d_level = 0;
  domain_cmd->add_option("--preset", d_preset, "Preset name")->required();
  domain_cmd->add_option("--epsilon", d_params.epsilon, "Overlap (SG dilation, sawtooth half-width)");
  domain_cmd->add_option("--height", d_params.height, "Sawtooth apex height");
  domain_cmd->add_option("--width", d_params.width, "interval_rectangle side a");
  domain_cmd->add_option("--rect-height", d_params.rect_height, "interval_rectangle side b");
  domain_cmd->add_option("--level", d_level, "Level m")->check(CLI::NonNegativeNumber);
  domain_cmd->add_option("--out", d_out, "Output JSON (stdout if omitted)");

  // mesh
  auto* mesh_cmd = app.add_subcommand("mesh", "Triangulate a domain spec");
  std::string m_domain, m_out, m_template = "fan";
  int m_subdiv = 1, m_refine = 0;
  mesh_cmd->add_option("--domain", m_domain, "Domain JSON")->required();
  mesh_cmd->add_option("--subdiv", m_subdiv, "Per-cell subdivision (rounded up to an aligned value for overlaps)")
      ->check(CLI::PositiveNumber);
  mesh_cmd->add_option("--refine", m_refine, "Red refinements")->check(CLI::NonNegativeNumber);
  mesh_cmd->add_option("--quad", m_template, "Square cell template: fan or grid")->check(CLI::IsMember({"fan", "grid"}));
  mesh_cmd->add_option("--out", m_out, "Output OFF file")->required();

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Lowest Neumann eigenpairs of a mesh");
  std::string s_mesh, s_out, s_vectors, s_method = "auto";
  SolveOptions s_opts;
  s_opts.nev = 60;
  solve_cmd->add_option("--mesh", s_mesh, "OFF mesh")->required();
  solve_cmd->add_option("--nev", s_opts.nev, "Number of eigenpairs")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--tol", s_opts.tol, "Relative residual tolerance");
  solve_cmd->add_option("--method", s_method, "auto, dense or lanczos");
  solve_cmd->add_option("--out", s_out, "Spectrum CSV; a JSON sidecar is written next to it")->required();
  solve_cmd->add_option("--vectors", s_vectors, "Eigenvector CSV");

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "Clusters, renormalization factors and Weyl fit");
  std::string a_spec, a_next, a_out, a_weyl;
  double a_tau = 5e-3;
  RSearchWindow a_window;
  analyze_cmd->add_option("--spec", a_spec, "Spectrum CSV")->required();
  analyze_cmd->add_option("--spec-next", a_next, "Next-level spectrum CSV for the level-to-level factor");
  analyze_cmd->add_option("--tau", a_tau, "Relative cluster tolerance");
  analyze_cmd->add_option("--R-lo", a_window.lo, "Lower end of the R search window");
  analyze_cmd->add_option("--R-hi", a_window.hi, "Upper end of the R search window");
  analyze_cmd->add_option("--match-tol", a_window.match_tol, "Partner tolerance (default: tau)");
  analyze_cmd->add_option("--out", a_out, "Report JSON (stdout if omitted)");
  analyze_cmd->add_option("--weyl", a_weyl, "Weyl CSV x,N,W");

  // classify
  auto* classify_cmd = app.add_subcommand("classify", "Representation labels of eigenvalue clusters");
  std::string c_spec, c_vectors, c_mesh, c_group = "d4", c_out;
  double c_tau = 5e-3;
  int c_limit = 0;
  classify_cmd->add_option("--spec", c_spec, "Spectrum CSV")->required();
  classify_cmd->add_option("--vectors", c_vectors, "Eigenvector CSV (all eigenpairs)")->required();
  classify_cmd->add_option("--mesh", c_mesh, "OFF mesh the vectors live on")->required();
  classify_cmd->add_option("--group", c_group, "d4 or d8");
  classify_cmd->add_option("--tau", c_tau, "Relative cluster tolerance");
  classify_cmd->add_option("--limit", c_limit, "Only the first n nonzero eigenvalues");
  classify_cmd->add_option("--out", c_out, "CSV n,eigenvalue,label (stdout if omitted)");

  // miniaturize
  auto* mini_cmd = app.add_subcommand("miniaturize", "Tile a level-m eigenfunction onto level m+1");
  std::string n_preset = "sc", n_out;
  int n_level = 1, n_index = 1, n_refine = 0, n_nev = 0;
  double n_tau = 5e-3, n_tol = 1e-9;
  bool n_verify = false;
  mini_cmd->add_option("--preset", n_preset, "sc, 12_16 or octagasket");
  mini_cmd->add_option("--level", n_level, "Source level m")->check(CLI::NonNegativeNumber);
  mini_cmd->add_option("--index", n_index, "1-based index among the nonzero eigenvalues")->check(CLI::PositiveNumber);
  mini_cmd->add_option("--refine", n_refine, "Red refinements of both meshes")->check(CLI::NonNegativeNumber);
  mini_cmd->add_option("--nev", n_nev, "Eigenpairs to compute (default index + 8)");
  mini_cmd->add_option("--tau", n_tau, "Relative cluster tolerance");
  mini_cmd->add_option("--tol", n_tol, "Solver tolerance");
  mini_cmd->add_flag("--verify", n_verify, "Report Rayleigh factor, residual and label of each output");
  mini_cmd->add_option("--out", n_out, "Vector CSV on the level m+1 mesh");

  // oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "Exact reference spectra");
  oracle_cmd->require_subcommand(1);
  std::string o_out;
  auto* rect_cmd = oracle_cmd->add_subcommand("rectangle", "Neumann eigenvalues of [0,a] x [0,b]");
  double o_a = 1.0, o_b = 1.0;
  int o_count = 10;
  rect_cmd->add_option("--a", o_a, "Side a");
  rect_cmd->add_option("--b", o_b, "Side b");
  rect_cmd->add_option("--count", o_count, "Number of eigenvalues")->check(CLI::PositiveNumber);
  rect_cmd->add_option("--out", o_out, "Spectrum CSV (stdout if omitted)");
  auto* sgrow_cmd = oracle_cmd->add_subcommand("sg-row", "Spectral decimation eigenvalues of the SG row");
  int o_m = 12;
  std::vector<int> o_j{1};
  sgrow_cmd->add_option("--m", o_m, "Level")->check(CLI::NonNegativeNumber);
  sgrow_cmd->add_option("--j", o_j, "Frequencies")->check(CLI::PositiveNumber);
  sgrow_cmd->add_option("--out", o_out, "Spectrum CSV (stdout if omitted)");

  // carpet
  auto* carpet_cmd = app.add_subcommand("carpet", "Generate a random carpet");
  CarpetSpec r_spec;
  r_spec.removals_per_level = {2};
  r_spec.levels = 3;
  int r_bifurcate = 0;
  std::uint64_t r_bseed = 0;
  std::string r_out;
  carpet_cmd->add_option("--j", r_spec.grid, "Grid size j");
  carpet_cmd->add_option("--k", r_spec.removals_per_level, "Removals per level (one value or one per level)");
  carpet_cmd->add_option("--levels", r_spec.levels, "Levels");
  carpet_cmd->add_option("--seed", r_spec.seed, "Seed");
  carpet_cmd->add_option("--bifurcate", r_bifurcate, "Regrow from this level with --bifurcate-seed");
  carpet_cmd->add_option("--bifurcate-seed", r_bseed, "Seed for the regrown levels");
  carpet_cmd->add_option("--out", r_out, "Domain JSON (stdout if omitted)");

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run domain -> mesh -> solve -> analyze from a JSON config");
  std::string p_config, p_replay, p_out_dir;
  std::optional<int> p_nev;
  std::optional<double> p_tau;
  bool p_normalized = false, p_no_ratios = false;
  pipe_cmd->add_option("--config", p_config, "Config JSON");
  pipe_cmd->add_option("--replay", p_replay, "Re-run a manifest and compare digests");
  pipe_cmd->add_option("--out-dir", p_out_dir, "Output directory (overrides the config)");
  pipe_cmd->add_option("--nev", p_nev, "Overrides the config");
  pipe_cmd->add_option("--tau", p_tau, "Overrides the config");
  pipe_cmd->add_flag("--normalized", p_normalized, "Tables show lambda_n / lambda_1");
  pipe_cmd->add_flag("--no-ratios", p_no_ratios, "Tables omit the level ratio columns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*domain_cmd) {
      const CellDomain d = build_preset_domain(parse_preset(d_preset), d_params, d_level);
      const std::string text = json_text(domain_to_json(d));
      if (d_out.empty()) {
        std::cout << text;
      } else {
        write_text(d_out, text);
      }
    } else if (*mesh_cmd) {
      const CellDomain d = domain_from_json(read_json(m_domain));
      const QuadTemplate quad = m_template == "grid" ? QuadTemplate::Grid : QuadTemplate::CenterFan;
      const TriMesh mesh = refine(triangulate(d, mesh_subdivision(d, m_subdiv), quad), m_refine);
      auto out = open_out(m_out);
      write_off(out, mesh);
      const auto q = mesh_quality(mesh);
      std::cerr << "vertices " << q.vertex_count << ", triangles " << q.triangle_count << ", min angle "
                << q.min_angle_deg << " deg\n";
    } else if (*solve_cmd) {
      s_opts.method = parse_method(s_method);
      const TriMesh mesh = load_mesh(s_mesh);
      const auto sys = assemble(mesh);
      Spectrum s = solve_lowest(sys.K, sys.M, s_opts);
      s.meta.domain = fs::path(s_mesh).stem().string();
      s.meta.vertex_count = mesh.vertices.size();
      s.meta.triangle_count = mesh.triangles.size();
      {
        auto out = open_out(s_out);
        write_spectrum_csv(out, s);
      }
      write_text(sidecar_path(s_out), json_text(solve_sidecar(s, s_opts)));
      if (!s_vectors.empty()) {
        std::vector<int> idx(s.pairs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
        auto out = open_out(s_vectors);
        write_vectors_csv(out, mesh, s, idx);
      }
    } else if (*analyze_cmd) {
      const auto values = load_spectrum(a_spec).values();
      std::optional<std::vector<double>> next;
      if (!a_next.empty()) next = load_spectrum(a_next).values();
      ClusterParams cp;
      cp.tau = a_tau;
      const AnalysisReport rep = analyze_spectrum(values, next ? &*next : nullptr, cp, a_window);
      const std::string text = json_text(report_to_json(rep));
      if (a_out.empty()) {
        std::cout << text;
      } else {
        write_text(a_out, text);
      }
      if (!a_weyl.empty()) {
        if (!rep.weyl) throw InvalidInput("Weyl fit needs at least 10 nonzero eigenvalues");
        auto out = open_out(a_weyl);
        write_weyl_csv(out, *rep.weyl);
      }
    } else if (*classify_cmd) {
      const Spectrum s = load_spectrum(c_spec);
      const TriMesh mesh = load_mesh(c_mesh);
      std::ifstream vin(c_vectors);
      if (!vin) throw InvalidInput("cannot read " + c_vectors);
      const auto cols = read_vectors_csv(vin, mesh.vertices.size());
      std::vector<Eigen::VectorXd> vectors;
      for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i].first != static_cast<int>(i)) throw InvalidInput("vector file must hold eigenpairs 0..k-1");
        vectors.push_back(cols[i].second);
      }
      if (vectors.size() < s.pairs.size()) throw InvalidInput("vector file has fewer eigenpairs than the spectrum");
      const DihedralGroup G = group_for_mesh(c_group, mesh);
      const VertexAction action = vertex_action(G, mesh);
      const auto sys = assemble(mesh);
      const auto rows = classify_spectrum(s, vectors, G, action, sys.M, c_tau, c_limit);
      if (c_out.empty()) {
        write_classification_csv(std::cout, rows);
      } else {
        auto out = open_out(c_out);
        write_classification_csv(out, rows);
      }
    } else if (*mini_cmd) {
      const Preset preset = parse_preset(n_preset);
      const CellDomain d0 = build_preset_domain(preset, {}, n_level);
      const CellDomain d1 = build_preset_domain(preset, {}, n_level + 1);
      const TriMesh m0 = refine(triangulate(d0, 1), n_refine);
      const TriMesh m1 = refine(triangulate(d1, 1), n_refine);
      const auto s0 = assemble(m0);
      SolveOptions o;
      o.nev = n_nev > 0 ? n_nev : n_index + 8;
      o.tol = n_tol;
      const Spectrum sp = solve_lowest(s0.K, s0.M, o);
      const auto values = sp.values();
      const int z = count_zero_modes(values);
      std::vector<double> tail(values.begin() + z, values.end());
      if (n_index > static_cast<int>(tail.size())) throw InvalidInput("--index beyond the computed eigenvalues");
      ClusterParams cp;
      cp.tau = n_tau;
      const auto clusters = cluster_multiplicities(tail, cp);
      const auto c = *std::find_if(clusters.begin(), clusters.end(),
                                   [&](const Cluster& k) { return n_index - 1 < k.start + k.size; });
      if (c.start + c.size == static_cast<int>(tail.size())) {
        throw InvalidInput("the cluster may continue past --nev; raise --nev");
      }
      const DihedralGroup G = symmetry_group(d0);
      const VertexAction a0 = vertex_action(G, m0);
      std::vector<Eigen::VectorXd> W;
      for (int i = 0; i < c.size; ++i) W.push_back(sp.pairs[z + c.start + i].vector);
      const Classification cls = classify(W, G, a0, s0.M);
      const auto basis = label_dimension(cls.label) == 2 ? adapt_basis(W, cls.label, G, a0, s0.M) : W;
      const auto mini = miniaturize(basis, cls.label, d0, m0, d1, m1);
      std::cout << "source n=" << c.start + 1 << " size " << c.size << " eigenvalue " << c.value << " label "
                << label_name(cls.label) << "\n";
      if (n_verify) {
        const auto s1 = assemble(m1);
        const VertexAction a1 = vertex_action(G, m1);
        const double contraction = d0.ifs.maps.at(0).contraction_ratio;
        for (std::size_t i = 0; i < mini.size(); ++i) {
          const auto chk = verify_miniaturization(mini[i], c.value, s1.K, s1.M, contraction);
          const auto back = classify({mini[i]}, symmetry_group(d1), a1, s1.M);
          std::cout << "output " << i << ": factor " << std::setprecision(12) << chk.factor << " (expected "
                    << chk.expected << "), residual " << std::setprecision(3) << chk.residual << ", label "
                    << label_name(back.label) << "\n";
        }
      }
      if (!n_out.empty()) {
        Spectrum out_spec;
        const auto s1 = assemble(m1);
        for (const auto& v : mini) out_spec.pairs.push_back({rayleigh(v, s1.K, s1.M), v, 0.0});
        std::vector<int> idx(mini.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
        auto out = open_out(n_out);
        write_vectors_csv(out, m1, out_spec, idx);
      }
    } else if (*oracle_cmd) {
      Spectrum s;
      if (*rect_cmd) {
        for (const auto& m : rectangle_spectrum(o_a, o_b, o_count)) s.pairs.push_back({m.value, {}, 0.0});
      } else {
        // Rows are indexed by j - 1; the value is the level-m decimation eigenvalue for cos(pi j x).
        std::sort(o_j.begin(), o_j.end());
        for (int j : o_j) s.pairs.push_back({sg_row_eigenvalue(o_m, j), {}, 0.0});
      }
      if (o_out.empty()) {
        write_spectrum_csv(std::cout, s);
      } else {
        auto out = open_out(o_out);
        write_spectrum_csv(out, s);
      }
    } else if (*carpet_cmd) {
      r_spec.validate();
      CellDomain d = random_carpet(r_spec);
      if (r_bifurcate > 0) d = bifurcate(d, r_bifurcate, r_bseed);
      const auto rep = connectivity_report(d);
      std::cerr << "cells " << d.cells.size() << ", components " << rep.component_count << ", corner couplings "
                << rep.corner_coupled.size() << "\n";
      const std::string text = json_text(domain_to_json(d));
      if (r_out.empty()) {
        std::cout << text;
      } else {
        write_text(r_out, text);
      }
    } else if (*pipe_cmd) {
      if (p_config.empty() == p_replay.empty()) throw InvalidInput("pass exactly one of --config and --replay");
      if (!p_replay.empty()) {
        const Json manifest = read_json(p_replay);
        PipelineConfig c = parse_config(manifest.at("config"));
        if (!p_out_dir.empty()) c.out_dir = p_out_dir;
        const Json again = run_pipeline(c, command_line);
        std::map<std::string, std::string> want, got;
        for (const auto& o : manifest.at("outputs")) want[o.at("path")] = o.at("sha256");
        for (const auto& o : again.at("outputs")) got[o.at("path")] = o.at("sha256");
        int bad = 0;
        for (const auto& [path, digest] : want) {
          const auto it = got.find(path);
          const bool ok = it != got.end() && it->second == digest;
          if (!ok) ++bad;
          std::cout << (ok ? "match    " : "MISMATCH ") << path << "\n";
        }
        if (bad || want.size() != got.size()) throw NumericalFailure("replay did not reproduce the manifest digests");
      } else {
        PipelineConfig c = parse_config(read_json(p_config));
        if (!p_out_dir.empty()) c.out_dir = p_out_dir;
        if (p_nev) c.nev = *p_nev;
        if (p_tau) c.tau = *p_tau;
        if (p_normalized) c.normalized = true;
        if (p_no_ratios) c.ratios = false;
        c = parse_config(config_to_json(c));
        const Json manifest = run_pipeline(c, command_line);
        std::cout << "wrote " << manifest.at("outputs").size() << " artifacts to " << c.out_dir << "\n";
      }
    }
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
