#pragma once

// Conforming triangulation of a star-shaped domain. Vertices are placed on
// scaled copies of the boundary curve (rings s_k * rho(theta)); adjacent rings
// are stitched together and the result is made Delaunay by Lawson flips.
// Boundary vertices sit exactly on the curve at uniformly spaced theta.

#include "rpl/errors.hpp"
#include "rpl/geometry.hpp"

#include <array>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

namespace rpl {

using Triangle = std::array<int, 3>;

struct BoundaryVertex {
  int vertex;
  double theta;  ///< in [0, 2 pi)
};

struct MeshOptions {
  /// Selects the angular phase pattern of the vertex rings. Different seeds
  /// give different (equally valid) meshes of the same domain.
  int seed = 0;
  double min_angle_deg = 20.0;
};

class Mesh {
 public:
  Mesh(BoundaryCurve curve, double h, std::vector<Vec2> vertices, std::vector<Triangle> triangles,
       std::vector<BoundaryVertex> boundary)
      : curve_(std::move(curve)),
        h_(h),
        vertices_(std::move(vertices)),
        triangles_(std::move(triangles)),
        boundary_(std::move(boundary)) {
    on_boundary_.assign(vertices_.size(), -1);
    for (std::size_t i = 0; i < boundary_.size(); ++i) on_boundary_[boundary_[i].vertex] = static_cast<int>(i);
  }

  const BoundaryCurve& curve() const { return curve_; }
  double h() const { return h_; }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  /// Boundary vertices ordered by increasing theta.
  const std::vector<BoundaryVertex>& boundary() const { return boundary_; }
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }

  /// Position of `v` in boundary(), or -1 for interior vertices.
  int boundary_index(int v) const { return on_boundary_[v]; }
  bool is_boundary(int v) const { return on_boundary_[v] >= 0; }

  double triangle_area(int t) const {
    const auto& [a, b, c] = triangles_[t];
    return 0.5 * cross(vertices_[b] - vertices_[a], vertices_[c] - vertices_[a]);
  }

  double area() const {
    double s = 0.0;
    for (int t = 0; t < num_triangles(); ++t) s += triangle_area(t);
    return s;
  }

  /// Smallest interior angle over all triangles, in degrees.
  double min_angle_deg() const {
    double m = 180.0;
    for (const auto& tri : triangles_) {
      for (int k = 0; k < 3; ++k) {
        const Vec2 a = vertices_[tri[(k + 1) % 3]] - vertices_[tri[k]];
        const Vec2 b = vertices_[tri[(k + 2) % 3]] - vertices_[tri[k]];
        m = std::min(m, std::atan2(std::abs(cross(a, b)), a.dot(b)) * 180.0 / std::numbers::pi);
      }
    }
    return m;
  }

 private:
  BoundaryCurve curve_;
  double h_;
  std::vector<Vec2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryVertex> boundary_;
  std::vector<int> on_boundary_;
};

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

inline double orient(const Vec2& a, const Vec2& b, const Vec2& c) { return cross(b - a, c - a); }

/// > 0 when d lies strictly inside the circumcircle of the ccw triangle abc.
inline double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const Vec2 ad = a - d, bd = b - d, cd = c - d;
  return (ad.squaredNorm() * cross(bd, cd) - bd.squaredNorm() * cross(ad, cd) + cd.squaredNorm() * cross(ad, bd));
}

inline void make_ccw(const std::vector<Vec2>& x, Triangle& t) {
  if (orient(x[t[0]], x[t[1]], x[t[2]]) < 0.0) std::swap(t[1], t[2]);
}

/// Lawson edge flips on interior edges until every interior edge is locally
/// Delaunay. Boundary edges are never touched.
inline void delaunay_flips(const std::vector<Vec2>& x, std::vector<Triangle>& tris) {
  for (int pass = 0; pass < 1000; ++pass) {
    std::unordered_map<std::uint64_t, std::array<int, 2>> owners;
    owners.reserve(tris.size() * 2);
    for (int t = 0; t < static_cast<int>(tris.size()); ++t)
      for (int k = 0; k < 3; ++k) {
        auto [it, inserted] = owners.try_emplace(edge_key(tris[t][k], tris[t][(k + 1) % 3]), std::array<int, 2>{t, -1});
        if (!inserted) it->second[1] = t;
      }
    std::vector<char> touched(tris.size(), 0);
    int flips = 0;
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
      if (touched[t]) continue;
      for (int k = 0; k < 3 && !touched[t]; ++k) {
        const int a = tris[t][k], b = tris[t][(k + 1) % 3], c = tris[t][(k + 2) % 3];
        const auto& own = owners.at(edge_key(a, b));
        const int u = own[0] == t ? own[1] : own[0];
        if (u < 0 || touched[u]) continue;
        int d = -1;
        for (int m = 0; m < 3; ++m)
          if (tris[u][m] != a && tris[u][m] != b) d = tris[u][m];
        const double scale = (x[a] - x[c]).squaredNorm() * (x[b] - x[c]).squaredNorm();
        if (incircle(x[a], x[b], x[c], x[d]) <= 1e-10 * scale) continue;
        // flip ab -> cd: triangles (c, a, d) and (c, d, b)
        if (orient(x[c], x[a], x[d]) <= 0.0 || orient(x[c], x[d], x[b]) <= 0.0) continue;
        tris[t] = {c, a, d};
        tris[u] = {c, d, b};
        touched[t] = touched[u] = 1;
        ++flips;
      }
    }
    if (flips == 0) return;
  }
}

}  // namespace detail

/// Triangulates the domain bounded by `curve` with target edge length `h`.
inline Mesh triangulate(const BoundaryCurve& curve, double h, const MeshOptions& opts = {}) {
  if (!(h > 0.0)) throw ResolutionError("mesh size h must be positive");
  const double length = curve.length();
  const int rings = static_cast<int>(std::ceil(curve.max_radius() / h - 1e-9));
  const int nb = static_cast<int>(std::ceil(length / h - 1e-9));
  if (rings < 3 || nb < 16 || h > 0.5 * curve.min_radius())
    throw ResolutionError("mesh size h = " + std::to_string(h) + " is too large to resolve the curve");

  // Ring phase pattern: fractions of one angular step.
  auto ring_phase = [&](int k) {
    const double golden = 0.6180339887498949;
    double f = 0.5 * (k % 2) + opts.seed * golden * (k + 1);
    return f - std::floor(f);
  };

  std::vector<Vec2> x;
  std::vector<std::vector<int>> ring_ids(rings + 1);
  std::vector<std::vector<double>> ring_theta(rings + 1);
  x.push_back(curve.center());
  ring_ids[0] = {0};
  ring_theta[0] = {0.0};
  std::vector<BoundaryVertex> boundary;
  for (int k = 1; k <= rings; ++k) {
    const bool outer = (k == rings);
    const double s = static_cast<double>(k) / rings;
    const int n = outer ? nb : std::max(6, static_cast<int>(std::lround(static_cast<double>(nb) * k / rings)));
    const double step = kTwoPi / n;
    const double phase = outer ? (opts.seed == 0 ? 0.0 : ring_phase(k) * step) : ring_phase(k) * step;
    for (int i = 0; i < n; ++i) {
      const double th = phase + i * step;
      const Vec2 e(std::cos(th), std::sin(th));
      const double r = curve.radius()(th);
      ring_ids[k].push_back(static_cast<int>(x.size()));
      ring_theta[k].push_back(th);
      if (outer) boundary.push_back({static_cast<int>(x.size()), std::fmod(th, kTwoPi)});
      x.push_back(curve.center() + s * r * e);
    }
  }

  std::vector<Triangle> tris;
  for (std::size_t i = 0; i < ring_ids[1].size(); ++i)
    tris.push_back({0, ring_ids[1][i], ring_ids[1][(i + 1) % ring_ids[1].size()]});
  for (int k = 1; k < rings; ++k) {
    const auto& ia = ring_ids[k];
    const auto& ib = ring_ids[k + 1];
    const int na = static_cast<int>(ia.size()), nbk = static_cast<int>(ib.size());
    const double a0 = ring_theta[k][0];
    // outer ring start: the node with angle closest to a0 from below
    const double stepb = kTwoPi / nbk;
    const double b_phase = ring_theta[k + 1][0];
    int j0 = static_cast<int>(std::floor((a0 - b_phase) / stepb));
    auto ang_a = [&](int i) { return a0 + i * (kTwoPi / na); };
    auto ang_b = [&](int m) { return b_phase + (j0 + m) * stepb; };
    auto id_b = [&](int m) { return ib[((j0 + m) % nbk + nbk) % nbk]; };
    int i = 0, m = 0;
    while (i < na || m < nbk) {
      const bool advance_a = (m == nbk) || (i < na && ang_a(i + 1) <= ang_b(m + 1));
      if (advance_a) {
        tris.push_back({ia[i % na], id_b(m), ia[(i + 1) % na]});
        ++i;
      } else {
        tris.push_back({ia[i % na], id_b(m), id_b(m + 1)});
        ++m;
      }
    }
  }
  for (auto& t : tris) detail::make_ccw(x, t);
  detail::delaunay_flips(x, tris);

  std::sort(boundary.begin(), boundary.end(), [](const auto& a, const auto& b) { return a.theta < b.theta; });
  Mesh mesh(curve, h, std::move(x), std::move(tris), std::move(boundary));
  const double min_angle = mesh.min_angle_deg();
  if (min_angle < opts.min_angle_deg)
    throw ResolutionError("mesh quality too low: min angle " + std::to_string(min_angle) + " deg");
  for (int t = 0; t < mesh.num_triangles(); ++t)
    if (!(mesh.triangle_area(t) > 0.0)) throw ResolutionError("degenerate triangle produced");
  return mesh;
}

/// Uniform red refinement: every triangle split into four. Midpoints of
/// boundary edges are placed on the exact curve at the mid parameter.
inline Mesh refine(const Mesh& mesh) {
  std::vector<Vec2> x = mesh.vertices();
  std::vector<BoundaryVertex> boundary = mesh.boundary();
  std::map<std::uint64_t, int> midpoint;
  const int nb = static_cast<int>(mesh.boundary().size());

  auto mid = [&](int a, int b) {
    const auto key = detail::edge_key(a, b);
    if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
    const int ia = mesh.boundary_index(a), ib = mesh.boundary_index(b);
    const bool boundary_edge = ia >= 0 && ib >= 0 && ((ia + 1) % nb == ib || (ib + 1) % nb == ia);
    const int id = static_cast<int>(x.size());
    if (boundary_edge) {
      double ta = mesh.boundary()[ia].theta, tb = mesh.boundary()[ib].theta;
      if ((ia + 1) % nb != ib) std::swap(ta, tb);
      if (tb < ta) tb += kTwoPi;
      const double tm = std::fmod(0.5 * (ta + tb), kTwoPi);
      x.push_back(mesh.curve().point(tm));
      boundary.push_back({id, tm});
    } else {
      x.push_back(0.5 * (x[a] + x[b]));
    }
    midpoint.emplace(key, id);
    return id;
  };

  std::vector<Triangle> tris;
  tris.reserve(4 * mesh.triangles().size());
  for (const auto& [a, b, c] : mesh.triangles()) {
    const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    tris.push_back({a, ab, ca});
    tris.push_back({ab, b, bc});
    tris.push_back({ca, bc, c});
    tris.push_back({ab, bc, ca});
  }
  std::sort(boundary.begin(), boundary.end(), [](const auto& p, const auto& q) { return p.theta < q.theta; });
  return Mesh(mesh.curve(), 0.5 * mesh.h(), std::move(x), std::move(tris), std::move(boundary));
}

struct BoundaryTraceEntry {
  int vertex;
  double theta;
  BoundaryFrame frame;
};

inline std::vector<BoundaryTraceEntry> boundary_trace_map(const Mesh& mesh) {
  std::vector<BoundaryTraceEntry> out;
  out.reserve(mesh.boundary().size());
  for (const auto& bv : mesh.boundary()) out.push_back({bv.vertex, bv.theta, boundary_frame(mesh.curve(), bv.theta)});
  return out;
}

/// Plain-text export:
///   # rpl-mesh 1
///   vertices N        followed by N rows "x y"
///   triangles T       followed by T rows "i j k" (0-based, ccw)
///   boundary B        followed by B rows "vertex theta"
inline void write_mesh(std::ostream& os, const Mesh& mesh) {
  os << "# rpl-mesh 1\n" << std::setprecision(17);
  os << "vertices " << mesh.num_vertices() << '\n';
  for (const auto& v : mesh.vertices()) os << v.x() << ' ' << v.y() << '\n';
  os << "triangles " << mesh.num_triangles() << '\n';
  for (const auto& t : mesh.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "boundary " << mesh.boundary().size() << '\n';
  for (const auto& b : mesh.boundary()) os << b.vertex << ' ' << b.theta << '\n';
}

}  // namespace rpl
