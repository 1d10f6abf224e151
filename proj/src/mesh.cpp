#include "mflab/mesh.hpp"

#include "mflab/errors.hpp"

#include <boost/polygon/voronoi.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>

namespace mflab {

double MeshOptions::size_at(Vec2 x) const {
  if (!(h_min > 0.0) || h_min >= h_max) return h_max;
  return std::min(h_max, h_min + grading * (x - focus).norm());
}

int Mesh::interior_count() const {
  return static_cast<int>(std::count(boundary_curve.begin(), boundary_curve.end(), -1));
}

namespace {

double signed_area(Vec2 a, Vec2 b, Vec2 c) {
  return 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
}

}  // namespace

double Mesh::area() const {
  double s = 0.0;
  for (const auto& t : triangles) s += signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
  return s;
}

double Mesh::min_angle_degrees() const {
  double worst = 180.0;
  for (const auto& t : triangles) {
    for (int k = 0; k < 3; ++k) {
      Vec2 a = vertices[t[k]], b = vertices[t[(k + 1) % 3]], c = vertices[t[(k + 2) % 3]];
      double cosv = (b - a).dot(c - a) / ((b - a).norm() * (c - a).norm());
      worst = std::min(worst, std::acos(std::clamp(cosv, -1.0, 1.0)) * 180.0 / std::numbers::pi);
    }
  }
  return worst;
}

int Mesh::boundary_loops() const {
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : triangles)
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  std::map<int, std::vector<int>> adj;
  for (const auto& [e, n] : count)
    if (n == 1) {
      adj[e.first].push_back(e.second);
      adj[e.second].push_back(e.first);
    }
  for (const auto& [v, nb] : adj)
    if (nb.size() != 2) return -1;  // not a union of simple loops
  std::set<int> seen;
  int loops = 0;
  for (const auto& [v, nb] : adj) {
    if (seen.count(v)) continue;
    ++loops;
    std::vector<int> stack{v};
    while (!stack.empty()) {
      int x = stack.back();
      stack.pop_back();
      if (!seen.insert(x).second) continue;
      for (int y : adj[x]) stack.push_back(y);
    }
  }
  return loops;
}

namespace {

// Delaunay triangles of pts, via the dual of Boost's Voronoi diagram on an integer grid.
std::vector<std::array<int, 3>> delaunay(const std::vector<Vec2>& pts) {
  Vec2 lo = pts[0], hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  double extent = std::max((hi - lo).maxCoeff(), 1e-300);
  double scale = static_cast<double>(1 << 29) / extent;
  std::vector<boost::polygon::point_data<int>> grid;
  grid.reserve(pts.size());
  for (const auto& p : pts)
    grid.emplace_back(static_cast<int>(std::lround((p.x() - lo.x()) * scale)),
                      static_cast<int>(std::lround((p.y() - lo.y()) * scale)));

  boost::polygon::voronoi_diagram<double> vd;
  boost::polygon::construct_voronoi(grid.begin(), grid.end(), &vd);

  std::vector<std::array<int, 3>> tris;
  std::vector<int> ring;
  for (const auto& v : vd.vertices()) {
    ring.clear();
    const auto* e = v.incident_edge();
    do {
      ring.push_back(static_cast<int>(e->cell()->source_index()));
      e = e->rot_next();
    } while (e != v.incident_edge());
    // Cocircular sites: fan from the first one.
    for (std::size_t k = 1; k + 1 < ring.size(); ++k) {
      std::array<int, 3> t{ring[0], ring[k], ring[k + 1]};
      if (signed_area(pts[t[0]], pts[t[1]], pts[t[2]]) < 0) std::swap(t[1], t[2]);
      tris.push_back(t);
    }
  }
  return tris;
}

struct Node {
  Vec2 x;
  int curve = -1;      // boundary curve or -1
  bool fixed = false;
};

std::vector<Node> boundary_nodes(const Domain& d, const MeshOptions& o) {
  std::vector<Node> nodes;
  constexpr int kSamples = 4096;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t k = 0; k < d.curves().size(); ++k) {
    const auto& c = d.curves()[k];
    std::vector<double> cum(kSamples + 1, 0.0);
    for (int i = 0; i < kSamples; ++i) {
      double t = two_pi * (i + 0.5) / kSamples;
      cum[i + 1] = cum[i] + c.d1(t).norm() * (two_pi / kSamples) / o.size_at(c.point(t));
    }
    int n = std::max(8, static_cast<int>(std::ceil(cum.back())));
    for (int j = 0; j < n; ++j) {
      double target = cum.back() * j / n;
      auto it = std::upper_bound(cum.begin(), cum.end(), target);
      int i = std::clamp(static_cast<int>(it - cum.begin()) - 1, 0, kSamples - 1);
      double frac = (target - cum[i]) / std::max(cum[i + 1] - cum[i], 1e-300);
      double t = two_pi * (i + frac) / kSamples;
      nodes.push_back({c.point(t), static_cast<int>(k), true});
    }
  }
  return nodes;
}

}  // namespace

Mesh triangulate(const Domain& d, double h_max) {
  MeshOptions o;
  o.h_max = h_max;
  o.vertex_at_focus = d.kind() == DomainKind::disk;
  return triangulate(d, o);
}

double default_mesh_size(const Domain& d) {
  auto box = d.bounding_box();
  double radius = 0.5 * (box[1] - box[0]).maxCoeff();
  return std::min(0.025 * radius, 0.99 * d.inradius() / 4.0);
}

Mesh triangulate(const Domain& d, const MeshOptions& o) {
  if (d.kind() == DomainKind::half_plane) throw MeshingError("cannot mesh an unbounded domain");
  if (!(o.h_max > 0.0)) throw MeshingError("h_max must be positive");
  if (!(o.h_max < d.inradius() / 4.0)) throw MeshingError("h_max must be below inradius / 4");
  auto box = d.bounding_box();
  double h0 = (o.h_min > 0.0 && o.h_min < o.h_max) ? o.h_min : o.h_max;
  if ((box[1] - box[0]).prod() / (h0 * h0) > 5e6) throw MeshingError("mesh would exceed 5e6 candidate nodes");

  std::vector<Node> nodes = boundary_nodes(d, o);
  if (o.vertex_at_focus) {
    if (!d.contains(o.focus)) throw MeshingError("focus vertex outside the domain");
    nodes.push_back({o.focus, -1, true});
  }

  // Hex lattice at the finest size, thinned to density 1/h^2.
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double dy = h0 * std::sqrt(3.0) / 2.0;
  int row = 0;
  for (double y = box[0].y(); y <= box[1].y(); y += dy, ++row) {
    for (double x = box[0].x() + (row % 2 ? h0 / 2 : 0.0); x <= box[1].x(); x += h0) {
      Vec2 p(x, y);
      double h = o.size_at(p);
      if (uni(rng) > (h0 * h0) / (h * h)) continue;
      if (!d.contains(p) || d.distance_to_boundary(p) < 0.7 * h) continue;
      if (o.vertex_at_focus && (p - o.focus).norm() < 0.7 * h) continue;
      nodes.push_back({p, -1, false});
    }
  }

  std::vector<Vec2> pts(nodes.size());
  auto sync = [&] {
    for (std::size_t i = 0; i < nodes.size(); ++i) pts[i] = nodes[i].x;
  };
  auto keep_triangle = [&](const std::array<int, 3>& t) {
    bool touches = nodes[t[0]].curve >= 0 || nodes[t[1]].curve >= 0 || nodes[t[2]].curve >= 0;
    if (!touches) return true;
    Vec2 c = (pts[t[0]] + pts[t[1]] + pts[t[2]]) / 3.0;
    if (!d.contains(c)) return false;
    bool all = nodes[t[0]].curve >= 0 && nodes[t[1]].curve >= 0 && nodes[t[2]].curve >= 0;
    return !(all && d.distance_to_boundary(c) < 0.25 * o.size_at(c));
  };
  auto mesh_triangles = [&] {
    sync();
    auto all = delaunay(pts);
    std::vector<std::array<int, 3>> kept;
    kept.reserve(all.size());
    for (const auto& t : all)
      if (keep_triangle(t)) kept.push_back(t);
    return kept;
  };

  constexpr double kFscale = 1.2, kDt = 0.2;
  for (int iter = 0; iter < o.max_iterations; ++iter) {
    auto tris = mesh_triangles();
    std::set<std::pair<int, int>> bars;
    for (const auto& t : tris)
      for (int k = 0; k < 3; ++k) {
        int a = t[k], b = t[(k + 1) % 3];
        bars.insert({std::min(a, b), std::max(a, b)});
      }
    double sum_l2 = 0.0, sum_h2 = 0.0;
    std::vector<std::pair<double, double>> lh;
    lh.reserve(bars.size());
    for (const auto& [a, b] : bars) {
      double l = (pts[a] - pts[b]).norm(), h = o.size_at(0.5 * (pts[a] + pts[b]));
      lh.emplace_back(l, h);
      sum_l2 += l * l;
      sum_h2 += h * h;
    }
    double ratio = kFscale * std::sqrt(sum_l2 / sum_h2);
    std::vector<Vec2> force(nodes.size(), Vec2::Zero());
    std::size_t k = 0;
    for (const auto& [a, b] : bars) {
      auto [l, h] = lh[k++];
      double push = std::max(ratio * h - l, 0.0);
      Vec2 f = push / std::max(l, 1e-300) * (pts[a] - pts[b]);
      force[a] += f;
      force[b] -= f;
    }
    double max_move = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].fixed) continue;
      Vec2 p = nodes[i].x + kDt * force[i];
      double h = o.size_at(p);
      auto q = d.boundary_query(p);
      if (q.outside || q.distance < 0.4 * h) p = q.nearest + 0.4 * h * q.inward_normal;
      max_move = std::max(max_move, (p - nodes[i].x).norm() / h);
      nodes[i].x = p;
    }
    if (max_move < 1e-3) break;
  }

  auto tris = mesh_triangles();
  // Drop vertices no triangle uses and renumber.
  std::vector<int> remap(nodes.size(), -1);
  for (const auto& t : tris)
    for (int v : t) remap[v] = 0;
  Mesh m;
  m.h_max = o.h_max;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (remap[i] < 0) continue;
    remap[i] = static_cast<int>(m.vertices.size());
    m.vertices.push_back(nodes[i].x);
    m.boundary_curve.push_back(nodes[i].curve);
  }
  for (auto t : tris) {
    for (int& v : t) v = remap[v];
    if (signed_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]) <= 0.0)
      throw MeshingError("degenerate triangle in final mesh");
    m.triangles.push_back(t);
  }
  if (m.boundary_loops() != static_cast<int>(d.curves().size()))
    throw MeshingError("mesh boundary does not match the domain curves");
  return m;
}

MeshLocator::MeshLocator(const Mesh& m) : mesh_(m) {
  Vec2 lo = m.vertices.at(0), hi = m.vertices[0];
  for (const auto& v : m.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  int side = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(m.triangles.size()) / 2.0)));
  nx_ = ny_ = side;
  lo_ = lo;
  cell_ = ((hi - lo) / side).cwiseMax(Vec2::Constant(1e-300));
  buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  for (int t = 0; t < m.triangle_count(); ++t) {
    Vec2 a = m.vertices[m.triangles[t][0]], b = m.vertices[m.triangles[t][1]], c = m.vertices[m.triangles[t][2]];
    Vec2 tlo = a.cwiseMin(b).cwiseMin(c), thi = a.cwiseMax(b).cwiseMax(c);
    int i0 = std::clamp(static_cast<int>((tlo.x() - lo_.x()) / cell_.x()), 0, nx_ - 1);
    int i1 = std::clamp(static_cast<int>((thi.x() - lo_.x()) / cell_.x()), 0, nx_ - 1);
    int j0 = std::clamp(static_cast<int>((tlo.y() - lo_.y()) / cell_.y()), 0, ny_ - 1);
    int j1 = std::clamp(static_cast<int>((thi.y() - lo_.y()) / cell_.y()), 0, ny_ - 1);
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j) buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(t);
  }
}

std::optional<std::pair<int, std::array<double, 3>>> MeshLocator::locate(Vec2 x) const {
  int i = static_cast<int>(std::floor((x.x() - lo_.x()) / cell_.x()));
  int j = static_cast<int>(std::floor((x.y() - lo_.y()) / cell_.y()));
  if (i < 0 || j < 0 || i >= nx_ || j >= ny_) {
    // points on the max edge of the box
    i = std::min(i, nx_ - 1);
    j = std::min(j, ny_ - 1);
    if (i < 0 || j < 0) return std::nullopt;
  }
  for (int t : buckets_[static_cast<std::size_t>(j) * nx_ + i]) {
    const auto& tri = mesh_.triangles[t];
    Vec2 a = mesh_.vertices[tri[0]], b = mesh_.vertices[tri[1]], c = mesh_.vertices[tri[2]];
    double area = signed_area(a, b, c);
    std::array<double, 3> w{signed_area(x, b, c) / area, signed_area(a, x, c) / area, signed_area(a, b, x) / area};
    if (std::min({w[0], w[1], w[2]}) >= -1e-12) return std::make_pair(t, w);
  }
  return std::nullopt;
}

std::optional<double> MeshLocator::interpolate(const Eigen::VectorXd& nodal, Vec2 x) const {
  auto hit = locate(x);
  if (!hit) return std::nullopt;
  const auto& tri = mesh_.triangles[hit->first];
  return hit->second[0] * nodal[tri[0]] + hit->second[1] * nodal[tri[1]] + hit->second[2] * nodal[tri[2]];
}

}  // namespace mflab
