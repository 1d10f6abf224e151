#include "mflab/errors.hpp"
#include "mflab/mesh.hpp"

#include <doctest.h>

#include <map>
#include <numbers>

using namespace mflab;

TEST_CASE("disk mesh statistics and refinement") {
  const Domain disk = Domain::disk(1);
  const Mesh coarse = triangulate(disk, 0.1);
  const Mesh fine = triangulate(disk, 0.05);
  CHECK(fine.vertex_count() >= 1400);
  const double growth = double(fine.vertex_count()) / coarse.vertex_count();
  CHECK(growth == doctest::Approx(4.0).epsilon(0.15));
  CHECK(fine.min_angle_degrees() >= 20.0);
  CHECK(coarse.min_angle_degrees() >= 20.0);
  CHECK(fine.boundary_loops() == 1);
  // polygonal area of an inscribed boundary
  CHECK(fine.area() == doctest::Approx(std::numbers::pi).epsilon(2e-3));
}

TEST_CASE("annulus and two-hole meshes mark every boundary loop") {
  const Mesh ann = triangulate(Domain::annulus(0.4, 1), 0.05);
  CHECK(ann.boundary_loops() == 2);
  CHECK(ann.min_angle_degrees() >= 20.0);
  const Domain two = Domain::generic(FourierCurve::circle({0, 0}, 1), {FourierCurve::circle({0.5, 0}, 0.15),
                                                                      FourierCurve::circle({-0.5, 0}, 0.15)});
  const Mesh m = triangulate(two, 0.03);
  CHECK(m.boundary_loops() == 3);
  CHECK(m.min_angle_degrees() >= 20.0);
}

TEST_CASE("mesh is conforming with boundary vertices on the curves") {
  const Domain ann = Domain::annulus(0.4, 1);
  const Mesh m = triangulate(ann, 0.05);
  std::map<std::pair<int, int>, int> edges;
  for (const auto& t : m.triangles) {
    const Vec2 a = m.vertices[t[0]], b = m.vertices[t[1]], c = m.vertices[t[2]];
    const double cross = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    CHECK(cross > 0);
    for (int k = 0; k < 3; ++k) ++edges[std::minmax(t[k], t[(k + 1) % 3])];
  }
  for (const auto& [e, count] : edges) {
    CHECK(count <= 2);
    if (count == 1) CHECK((m.is_boundary(e.first) && m.is_boundary(e.second)));
  }
  for (int v = 0; v < m.vertex_count(); ++v)
    if (m.is_boundary(v)) {
      CHECK(ann.distance_to_boundary(m.vertices[v]) <= 1e-8);
    } else {
      CHECK(ann.contains(m.vertices[v]));
    }
}

TEST_CASE("graded mesh puts a vertex at the focus") {
  MeshOptions o;
  o.h_max = 0.05;
  o.h_min = 0.005;
  o.grading = 0.1;
  o.vertex_at_focus = true;
  const Mesh m = triangulate(Domain::disk(1), o);
  bool found = false;
  for (const auto& v : m.vertices) found = found || v.norm() < 1e-14;
  CHECK(found);
  CHECK(m.min_angle_degrees() >= 20.0);
  CHECK(m.vertex_count() > triangulate(Domain::disk(1), 0.05).vertex_count());
}

TEST_CASE("linear functions interpolate exactly") {
  const Mesh m = triangulate(Domain::disk(1), 0.1);
  const MeshLocator loc(m);
  Eigen::VectorXd f(m.vertex_count());
  for (int v = 0; v < m.vertex_count(); ++v) f[v] = 2 * m.vertices[v].x() - m.vertices[v].y() + 0.5;
  for (const Vec2 x : {Vec2(0.1, 0.2), Vec2(-0.6, 0.3), Vec2(0.0, -0.9)}) {
    const auto v = loc.interpolate(f, x);
    REQUIRE(v.has_value());
    CHECK(*v == doctest::Approx(2 * x.x() - x.y() + 0.5).epsilon(1e-12));
  }
  CHECK_FALSE(loc.locate({2.0, 0.0}).has_value());
}

TEST_CASE("meshing errors") {
  CHECK_THROWS_AS(triangulate(Domain::half_plane(1), 0.1), MeshingError);
  CHECK_THROWS_AS(triangulate(Domain::annulus(0.4, 1), 0.2), MeshingError);
  CHECK(default_mesh_size(Domain::disk(1)) == doctest::Approx(0.025).epsilon(0.01));
}
