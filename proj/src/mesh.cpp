#include "fraclap/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "fraclap/error.hpp"
#include "fraclap/point_index.hpp"

namespace fraclap {

namespace {

constexpr double kPi = 3.14159265358979323846;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double tri_area(const Vec2& a, const Vec2& b, const Vec2& c) { return 0.5 * cross(b - a, c - a); }

using Tri = std::array<int, 3>;

// n^2 congruent subtriangles of (a,b,c), pushed as local point triples.
void subdivide_triangle(const Vec2& a, const Vec2& b, const Vec2& c, int n,
                        std::vector<std::array<Vec2, 3>>& out) {
  auto P = [&](int i, int j) { return Vec2(a + (double(i) / n) * (b - a) + (double(j) / n) * (c - a)); };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i + j < n; ++i) {
      out.push_back({P(i, j), P(i + 1, j), P(i, j + 1)});
      if (i + j + 1 < n) out.push_back({P(i + 1, j), P(i + 1, j + 1), P(i, j + 1)});
    }
  }
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

double TriMesh::area() const {
  double s = 0.0;
  for (const auto& t : triangles) s += tri_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
  return s;
}

double TriMesh::diameter() const {
  if (vertices.empty()) return 0.0;
  Vec2 lo = vertices[0], hi = vertices[0];
  for (const auto& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

TriMesh triangulate(const CellDomain& domain, int subdivision, QuadTemplate quad) {
  if (subdivision < 1) throw InvalidInput("subdivision must be >= 1");
  const double tol = 1e-9 * domain.diameter();
  PointIndex index(tol);
  TriMesh mesh;
  std::set<std::array<int, 3>> seen;
  std::vector<std::array<Vec2, 3>> local;
  for (std::size_t ci = 0; ci < domain.cells.size(); ++ci) {
    const Polygon& poly = domain.cells[ci].polygon;
    local.clear();
    const int n = subdivision;
    if (poly.size() == 3) {
      subdivide_triangle(poly[0], poly[1], poly[2], n, local);
    } else if (poly.size() == 4 && quad == QuadTemplate::Grid) {
      auto P = [&](int i, int j) {
        const double s = double(i) / n, t = double(j) / n;
        return Vec2((1 - s) * (1 - t) * poly[0] + s * (1 - t) * poly[1] + s * t * poly[2] + (1 - s) * t * poly[3]);
      };
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          local.push_back({P(i, j), P(i + 1, j), P(i + 1, j + 1)});
          local.push_back({P(i, j), P(i + 1, j + 1), P(i, j + 1)});
        }
      }
    } else if (poly.size() >= 4) {
      Vec2 c = Vec2::Zero();
      for (const auto& p : poly) c += p;
      c /= static_cast<double>(poly.size());
      for (std::size_t k = 0; k < poly.size(); ++k) {
        subdivide_triangle(c, poly[k], poly[(k + 1) % poly.size()], n, local);
      }
    } else {
      throw InvalidInput("unsupported cell shape");
    }
    for (const auto& lt : local) {
      Tri t;
      for (int k = 0; k < 3; ++k) t[k] = static_cast<int>(index.insert(lt[k]));
      if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) throw InvalidInput("degenerate template triangle");
      Tri key = t;
      std::sort(key.begin(), key.end());
      if (!seen.insert(key).second) continue;  // coincident triangle from an overlapping cell
      mesh.triangles.push_back(t);
      mesh.cell_of_triangle.push_back(static_cast<int>(ci));
    }
  }
  mesh.vertices = index.points();
  for (auto& t : mesh.triangles) {
    const double a = tri_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    if (a < 0) std::swap(t[1], t[2]);
  }
  std::string why;
  if (!is_conforming(mesh, &why)) {
    throw InvalidInput("non-conforming union of cell templates (" + why +
                       "); overlapping cells need a subdivision whose grid lines up, see aligned_subdivision");
  }
  return mesh;
}

TriMesh refine(const TriMesh& mesh) {
  TriMesh out;
  out.vertices = mesh.vertices;
  out.refinement = mesh.refinement + 1;
  out.triangles.reserve(mesh.triangles.size() * 4);
  out.cell_of_triangle.reserve(mesh.triangles.size() * 4);
  std::unordered_map<std::uint64_t, int> mid;
  mid.reserve(mesh.triangles.size() * 2);
  auto midpoint = [&](int a, int b) {
    const auto key = edge_key(a, b);
    auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    const int id = static_cast<int>(out.vertices.size());
    out.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
    mid.emplace(key, id);
    return id;
  };
  for (std::size_t ti = 0; ti < mesh.triangles.size(); ++ti) {
    const auto& t = mesh.triangles[ti];
    const int ab = midpoint(t[0], t[1]);
    const int bc = midpoint(t[1], t[2]);
    const int ca = midpoint(t[2], t[0]);
    const int cell = mesh.cell_of_triangle.empty() ? 0 : mesh.cell_of_triangle[ti];
    for (const Tri& nt : {Tri{t[0], ab, ca}, Tri{ab, t[1], bc}, Tri{ca, bc, t[2]}, Tri{ab, bc, ca}}) {
      out.triangles.push_back(nt);
      out.cell_of_triangle.push_back(cell);
    }
  }
  return out;
}

TriMesh refine(const TriMesh& mesh, int times) {
  TriMesh out = mesh;
  for (int i = 0; i < times; ++i) out = refine(out);
  return out;
}

TriMesh identify_vertices(const TriMesh& mesh, double tol) {
  if (tol < 0) throw InvalidInput("tolerance must be >= 0");
  PointIndex index(tol);
  std::vector<int> remap(mesh.vertices.size());
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    remap[v] = static_cast<int>(tol > 0 ? index.insert(mesh.vertices[v]) : index.force_insert(mesh.vertices[v]));
  }
  TriMesh out;
  out.vertices = index.points();
  out.refinement = mesh.refinement;
  for (std::size_t ti = 0; ti < mesh.triangles.size(); ++ti) {
    Tri t;
    for (int k = 0; k < 3; ++k) t[k] = remap[mesh.triangles[ti][k]];
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw InvalidInput("identify_vertices would collapse a triangle (tolerance too large)");
    }
    out.triangles.push_back(t);
    if (!mesh.cell_of_triangle.empty()) out.cell_of_triangle.push_back(mesh.cell_of_triangle[ti]);
  }
  return out;
}

MeshQuality mesh_quality(const TriMesh& mesh) {
  MeshQuality q;
  q.vertex_count = mesh.vertices.size();
  q.triangle_count = mesh.triangles.size();
  double min_angle = 180.0, max_aspect = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec2 p[3] = {mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]};
    double len[3], longest = 0.0, perim = 0.0;
    for (int k = 0; k < 3; ++k) {
      len[k] = (p[(k + 1) % 3] - p[k]).norm();
      longest = std::max(longest, len[k]);
      perim += len[k];
    }
    for (int k = 0; k < 3; ++k) {
      const Vec2 u = p[(k + 1) % 3] - p[k], w = p[(k + 2) % 3] - p[k];
      const double ang = std::atan2(std::abs(cross(u, w)), u.dot(w)) * 180.0 / kPi;
      min_angle = std::min(min_angle, ang);
    }
    const double area = std::abs(tri_area(p[0], p[1], p[2]));
    max_aspect = std::max(max_aspect, longest * perim / (4.0 * std::sqrt(3.0) * area));
  }
  q.min_angle_deg = mesh.triangles.empty() ? 0.0 : min_angle;
  q.max_aspect = max_aspect;
  return q;
}

bool is_conforming(const TriMesh& mesh, std::string* reason) {
  auto fail = [&](const std::string& r) {
    if (reason) *reason = r;
    return false;
  };
  std::unordered_map<std::uint64_t, int> edge_count;
  for (const auto& t : mesh.triangles) {
    if (tri_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]) <= 0) {
      return fail("triangle with non-positive area");
    }
    for (int k = 0; k < 3; ++k) {
      if (++edge_count[edge_key(t[k], t[(k + 1) % 3])] > 2) return fail("edge shared by more than two triangles");
    }
  }
  // Bucket triangles by bounding box, then test every vertex against nearby triangles.
  const double diam = mesh.diameter();
  if (mesh.triangles.empty() || diam <= 0) return true;
  Vec2 lo = mesh.vertices[0];
  for (const auto& v : mesh.vertices) lo = lo.cwiseMin(v);
  const double cell = std::max(diam / std::sqrt(static_cast<double>(mesh.triangles.size())), 1e-300);
  auto bucket = [&](const Vec2& p) {
    return std::pair<long, long>{static_cast<long>(std::floor((p.x() - lo.x()) / cell)),
                                 static_cast<long>(std::floor((p.y() - lo.y()) / cell))};
  };
  std::map<std::pair<long, long>, std::vector<int>> buckets;
  for (std::size_t ti = 0; ti < mesh.triangles.size(); ++ti) {
    const auto& t = mesh.triangles[ti];
    Vec2 tlo = mesh.vertices[t[0]], thi = tlo;
    for (int k = 1; k < 3; ++k) {
      tlo = tlo.cwiseMin(mesh.vertices[t[k]]);
      thi = thi.cwiseMax(mesh.vertices[t[k]]);
    }
    const auto [x0, y0] = bucket(tlo);
    const auto [x1, y1] = bucket(thi);
    for (long x = x0; x <= x1; ++x) {
      for (long y = y0; y <= y1; ++y) buckets[{x, y}].push_back(static_cast<int>(ti));
    }
  }
  const double eps = 1e-10 * diam;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const Vec2& p = mesh.vertices[v];
    auto it = buckets.find(bucket(p));
    if (it == buckets.end()) continue;
    for (int ti : it->second) {
      const auto& t = mesh.triangles[ti];
      if (t[0] == static_cast<int>(v) || t[1] == static_cast<int>(v) || t[2] == static_cast<int>(v)) continue;
      bool inside = true;
      for (int k = 0; k < 3 && inside; ++k) {
        const Vec2& a = mesh.vertices[t[k]];
        const Vec2& b = mesh.vertices[t[(k + 1) % 3]];
        if (cross(b - a, p - a) / (b - a).norm() < -eps) inside = false;
      }
      if (inside) return fail("vertex lies inside another triangle or on its edge");
    }
  }
  return true;
}

int aligned_subdivision(Preset preset, const PresetParams& params, int min_n) {
  double stretch = 0.0;  // cell edge / translation between neighbouring cells
  if (preset == Preset::SgTriangle) stretch = 1.0 + params.epsilon;
  if (preset == Preset::Sawtooth) stretch = 1.0 + 2.0 * params.epsilon;
  if (stretch <= 1.0) return std::max(min_n, 1);
  for (int n = std::max(min_n, 1); n <= 10000; ++n) {
    const double steps = n / stretch;
    if (std::abs(steps - std::round(steps)) < 1e-9 * n) return n;
  }
  throw InvalidInput("no aligned subdivision below 10000 for this overlap");
}

void write_off(std::ostream& os, const TriMesh& mesh) {
  os << "OFF\n";
  os << "# fraclap refinement " << mesh.refinement << "\n";
  os << mesh.vertices.size() << ' ' << mesh.triangles.size() << " 0\n";
  os.precision(17);
  for (const auto& v : mesh.vertices) os << v.x() << ' ' << v.y() << " 0\n";
  for (std::size_t ti = 0; ti < mesh.triangles.size(); ++ti) {
    const auto& t = mesh.triangles[ti];
    os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2];
    if (!mesh.cell_of_triangle.empty()) os << ' ' << mesh.cell_of_triangle[ti];
    os << '\n';
  }
}

TriMesh read_off(std::istream& is) {
  TriMesh mesh;
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(is, line)) {
      if (line.rfind("# fraclap refinement", 0) == 0) {
        mesh.refinement = std::stoi(line.substr(20));
        continue;
      }
      const auto pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos || line[pos] == '#') continue;
      return true;
    }
    return false;
  };
  if (!next_line() || line.rfind("OFF", 0) != 0) throw InvalidInput("mesh file: missing OFF header");
  if (!next_line()) throw InvalidInput("mesh file: missing counts");
  std::size_t nv = 0, nt = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> nv >> nt)) throw InvalidInput("mesh file: bad counts");
  }
  for (std::size_t i = 0; i < nv; ++i) {
    if (!next_line()) throw InvalidInput("mesh file: truncated vertices");
    std::istringstream ss(line);
    double x, y;
    if (!(ss >> x >> y)) throw InvalidInput("mesh file: bad vertex");
    mesh.vertices.emplace_back(x, y);
  }
  bool have_cells = true;
  std::vector<int> cells;
  for (std::size_t i = 0; i < nt; ++i) {
    if (!next_line()) throw InvalidInput("mesh file: truncated faces");
    std::istringstream ss(line);
    int k;
    Tri t;
    if (!(ss >> k >> t[0] >> t[1] >> t[2]) || k != 3) throw InvalidInput("mesh file: only triangles supported");
    for (int v : t) {
      if (v < 0 || v >= static_cast<int>(nv)) throw InvalidInput("mesh file: vertex index out of range");
    }
    int c;
    if (ss >> c) cells.push_back(c);
    else have_cells = false;
    mesh.triangles.push_back(t);
  }
  if (have_cells) mesh.cell_of_triangle = cells;
  else mesh.cell_of_triangle.assign(nt, 0);
  return mesh;
}

}  // namespace fraclap
