#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "biharm/geometry.hpp"

namespace biharm {

struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    bool operator==(const Rect&) const = default;
};

// Oriented mesh edge. The stored vertex pair (a, b) is ordered so that the
// left triangle traverses a->b in its CCW boundary; the unit normal points
// from the left triangle to the right one (outward on the boundary, where
// right == -1). All jump sign conventions downstream use this normal.
struct Edge {
    int a = -1, b = -1;
    int left = -1;
    int right = -1; // -1 on boundary edges
    Vec2 normal;
    double length = 0.0;
    Vec2 midpoint;

    bool on_boundary() const { return right < 0; }
};

struct EdgePatch {
    int left;
    std::optional<int> right;
    Vec2 normal;
    double length;
    Vec2 midpoint;
};

class Mesh {
public:
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles; // CCW vertex indices
    std::vector<Edge> edges;
    // tri_edges[t][i] is the edge opposite local vertex i; the sign is +1
    // when t is that edge's left triangle, -1 otherwise.
    std::vector<std::array<int, 3>> tri_edges;
    std::vector<std::array<int, 3>> tri_edge_signs;
    std::vector<bool> vertex_on_boundary;
    double h_max = 0.0;

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }
    int num_edges() const { return static_cast<int>(edges.size()); }

    std::array<Vec2, 3> triangle_vertices(int t) const {
        const auto& tri = triangles[t];
        return {vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]};
    }

    double triangle_area(int t) const {
        auto v = triangle_vertices(t);
        return biharm::triangle_area(v[0], v[1], v[2]);
    }

    Vec2 triangle_centroid(int t) const {
        auto v = triangle_vertices(t);
        return (v[0] + v[1] + v[2]) * (1.0 / 3.0);
    }

    double triangle_diameter(int t) const {
        auto v = triangle_vertices(t);
        return std::max({norm(v[1] - v[0]), norm(v[2] - v[1]), norm(v[0] - v[2])});
    }
};

inline EdgePatch edge_patch(const Mesh& mesh, int e) {
    if (e < 0 || e >= mesh.num_edges())
        throw std::out_of_range("edge_patch: edge index " + std::to_string(e) + " out of range");
    const Edge& ed = mesh.edges[e];
    EdgePatch p{ed.left, std::nullopt, ed.normal, ed.length, ed.midpoint};
    if (!ed.on_boundary()) p.right = ed.right;
    return p;
}

// Uniform triangulation of an axis-aligned rectangle: nx*ny cells, each split
// by the diagonal from its lower-left to upper-right corner.
inline Mesh build_uniform(int nx, int ny, const Rect& rect = Rect{}) {
    if (nx < 1 || ny < 1)
        throw std::invalid_argument("build_uniform: nx and ny must be >= 1");
    if (!(rect.x1 > rect.x0) || !(rect.y1 > rect.y0))
        throw std::invalid_argument("build_uniform: degenerate rectangle");

    Mesh mesh;
    const double dx = rect.width() / nx;
    const double dy = rect.height() / ny;

    mesh.vertices.reserve((nx + 1) * (ny + 1));
    for (int iy = 0; iy <= ny; ++iy)
        for (int ix = 0; ix <= nx; ++ix)
            mesh.vertices.push_back({rect.x0 + ix * dx, rect.y0 + iy * dy});

    auto vid = [nx](int ix, int iy) { return iy * (nx + 1) + ix; };

    mesh.triangles.reserve(2 * nx * ny);
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            int ll = vid(ix, iy), lr = vid(ix + 1, iy);
            int ul = vid(ix, iy + 1), ur = vid(ix + 1, iy + 1);
            mesh.triangles.push_back({ll, lr, ur});
            mesh.triangles.push_back({ll, ur, ul});
        }
    }

    // Edge discovery; per triangle the edge opposite vertex i runs from
    // vertex i+1 to i+2 in CCW order, so the first triangle to see an edge
    // becomes its left triangle.
    std::map<std::pair<int, int>, int> edge_index;
    mesh.tri_edges.assign(mesh.triangles.size(), {-1, -1, -1});
    mesh.tri_edge_signs.assign(mesh.triangles.size(), {0, 0, 0});
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int i = 0; i < 3; ++i) {
            int p = tri[(i + 1) % 3];
            int q = tri[(i + 2) % 3];
            auto key = std::minmax(p, q);
            auto it = edge_index.find(key);
            if (it == edge_index.end()) {
                Edge e;
                e.a = p;
                e.b = q;
                e.left = t;
                Vec2 d = mesh.vertices[q] - mesh.vertices[p];
                e.length = norm(d);
                e.normal = perp(d) * (1.0 / e.length);
                e.midpoint = (mesh.vertices[p] + mesh.vertices[q]) * 0.5;
                int idx = mesh.num_edges();
                mesh.edges.push_back(e);
                edge_index.emplace(key, idx);
                mesh.tri_edges[t][i] = idx;
                mesh.tri_edge_signs[t][i] = 1;
            } else {
                Edge& e = mesh.edges[it->second];
                if (e.right >= 0)
                    throw std::runtime_error("build_uniform: non-manifold edge");
                e.right = t;
                mesh.tri_edges[t][i] = it->second;
                mesh.tri_edge_signs[t][i] = -1;
            }
        }
    }

    mesh.vertex_on_boundary.assign(mesh.vertices.size(), false);
    for (const Edge& e : mesh.edges) {
        if (e.on_boundary()) {
            mesh.vertex_on_boundary[e.a] = true;
            mesh.vertex_on_boundary[e.b] = true;
        }
    }

    mesh.h_max = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t)
        mesh.h_max = std::max(mesh.h_max, mesh.triangle_diameter(t));

    return mesh;
}

// Debug dump: header `V E F`, vertex coordinates, triangle index triples.
inline void dump_mesh(const Mesh& mesh, std::ostream& os) {
    os << mesh.num_vertices() << ' ' << mesh.num_edges() << ' ' << mesh.num_triangles() << '\n';
    os.precision(17);
    for (const Vec2& v : mesh.vertices) os << v.x << ' ' << v.y << '\n';
    for (const auto& t : mesh.triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

} // namespace biharm
