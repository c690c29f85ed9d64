#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "fraclap/geometry.hpp"

namespace fraclap {

struct TriMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<int> cell_of_triangle;
  int refinement = 0;

  double area() const;
  double diameter() const;
};

enum class QuadTemplate {
  CenterFan,  // 4 triangles around the centre, each subdivided n^2 times
  Grid,       // n x n grid, each square split along one diagonal
};

// Per-cell structured templates merged into one conforming mesh.
// Vertices closer than 1e-9 * diameter are identified; coincident triangles from
// overlapping cells are kept once. Throws InvalidInput when overlapping cells
// produce a non-conforming union (subdivision grids that do not line up).
TriMesh triangulate(const CellDomain& domain, int subdivision, QuadTemplate quad = QuadTemplate::CenterFan);

// Red refinement: each triangle split into 4 by its edge midpoints.
TriMesh refine(const TriMesh& mesh);
TriMesh refine(const TriMesh& mesh, int times);

// Merges vertices closer than tol into a single degree of freedom.
TriMesh identify_vertices(const TriMesh& mesh, double tol);

struct MeshQuality {
  double min_angle_deg = 0.0;
  double max_aspect = 0.0;  // 1 for equilateral triangles
  std::size_t vertex_count = 0;
  std::size_t triangle_count = 0;
};
MeshQuality mesh_quality(const TriMesh& mesh);

// Interior edges shared by exactly two triangles, no edge used more than twice,
// and no vertex lying inside another triangle or in the interior of its edges.
bool is_conforming(const TriMesh& mesh, std::string* reason = nullptr);

// Smallest n >= min_n for which overlapping sawtooth / SG cells have aligned grids.
int aligned_subdivision(Preset preset, const PresetParams& params, int min_n = 1);

void write_off(std::ostream& os, const TriMesh& mesh);
TriMesh read_off(std::istream& is);

}  // namespace fraclap
