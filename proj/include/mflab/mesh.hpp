#pragma once

#include "mflab/geometry.hpp"

#include <array>
#include <optional>
#include <vector>

namespace mflab {

// Target edge length h(x) = min(h_max, h_min + grading |x - focus|); uniform when h_min >= h_max.
struct MeshOptions {
  double h_max = 0.05;
  double h_min = 0.0;
  double grading = 0.2;
  Vec2 focus = Vec2::Zero();
  bool vertex_at_focus = false;
  int max_iterations = 250;
  std::uint64_t seed = 7;

  double size_at(Vec2 x) const;
};

struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<int> boundary_curve;            // -1 for interior vertices
  double h_max = 0.0;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
  bool is_boundary(int v) const { return boundary_curve[v] >= 0; }
  int interior_count() const;
  double area() const;
  double min_angle_degrees() const;
  // Closed loops formed by edges that belong to a single triangle.
  int boundary_loops() const;
};

// Force-balance smoothing over repeated Delaunay triangulations; boundary
// vertices sit on the domain curves and never move.
// Requires h_max < inradius / 4. The single-size form puts a vertex at the disk center.
Mesh triangulate(const Domain& d, double h_max);
Mesh triangulate(const Domain& d, const MeshOptions& o);

// 0.025 times the bounding radius, capped below inradius / 4.
double default_mesh_size(const Domain& d);

// Bucketed point location for P1 interpolation.
class MeshLocator {
 public:
  explicit MeshLocator(const Mesh& m);
  // Triangle index and barycentric weights, or nullopt outside the mesh.
  std::optional<std::pair<int, std::array<double, 3>>> locate(Vec2 x) const;
  std::optional<double> interpolate(const Eigen::VectorXd& nodal, Vec2 x) const;

 private:
  const Mesh& mesh_;
  Vec2 lo_, cell_;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

}  // namespace mflab
