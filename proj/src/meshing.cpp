#include "webgen/meshing.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <tuple>

#include "webgen/mc_tables.hpp"

namespace webgen {

namespace {

double point_segment_distance(const Point3& p, const Point3& a, const Point3& b) {
    Point3 ab = b - a;
    double len2 = ab.x * ab.x + ab.y * ab.y + ab.z * ab.z;
    if (len2 == 0.0) return distance(p, a);
    Point3 ap = p - a;
    double t = (ap.x * ab.x + ap.y * ab.y + ap.z * ab.z) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, a + ab * t);
}

}  // namespace

double capsule_union_distance(const Graph& g, double radius, const Point3& p) {
    if (g.edge_count() == 0) throw Error("capsule_union_distance: graph has no edges");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : g.edges) {
        best = std::min(best, point_segment_distance(p, g.positions[a], g.positions[b]) - radius);
    }
    return best;
}

ScalarField web_sdf(const Graph& g, double strut_radius, int resolution) {
    if (g.edge_count() == 0) throw Error("web_sdf: graph has no edges");
    if (strut_radius <= 0.0 || resolution < 2) throw Error("web_sdf: bad radius or resolution");

    Point3 lo = g.positions[0], hi = g.positions[0];
    for (const auto& p : g.positions) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    double longest = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z, strut_radius});
    double spacing = longest / resolution;
    double pad = std::max(3.0 * strut_radius, 2.0 * spacing);

    ScalarField f;
    f.spacing = spacing;
    f.origin = {lo.x - pad, lo.y - pad, lo.z - pad};
    f.nx = static_cast<int>(std::ceil((hi.x - lo.x + 2 * pad) / spacing)) + 1;
    f.ny = static_cast<int>(std::ceil((hi.y - lo.y + 2 * pad) / spacing)) + 1;
    f.nz = static_cast<int>(std::ceil((hi.z - lo.z + 2 * pad) / spacing)) + 1;

    // Narrow band: distances are exact within `band` of a strut and saturate
    // at `band` further out. min(band, true distance) stays 1-Lipschitz with
    // the same zero set.
    const double band = std::max(3.0 * strut_radius, 4.0 * spacing);
    f.values.assign(static_cast<size_t>(f.nx) * f.ny * f.nz, band);

    const double reach = band + strut_radius;
    for (const auto& [a, b] : g.edges) {
        const Point3& pa = g.positions[a];
        const Point3& pb = g.positions[b];
        Point3 elo{std::min(pa.x, pb.x) - reach, std::min(pa.y, pb.y) - reach,
                   std::min(pa.z, pb.z) - reach};
        Point3 ehi{std::max(pa.x, pb.x) + reach, std::max(pa.y, pb.y) + reach,
                   std::max(pa.z, pb.z) + reach};
        int i0 = std::max(0, static_cast<int>(std::floor((elo.x - f.origin.x) / spacing)));
        int j0 = std::max(0, static_cast<int>(std::floor((elo.y - f.origin.y) / spacing)));
        int k0 = std::max(0, static_cast<int>(std::floor((elo.z - f.origin.z) / spacing)));
        int i1 = std::min(f.nx - 1, static_cast<int>(std::ceil((ehi.x - f.origin.x) / spacing)));
        int j1 = std::min(f.ny - 1, static_cast<int>(std::ceil((ehi.y - f.origin.y) / spacing)));
        int k1 = std::min(f.nz - 1, static_cast<int>(std::ceil((ehi.z - f.origin.z) / spacing)));
        for (int k = k0; k <= k1; ++k) {
            for (int j = j0; j <= j1; ++j) {
                for (int i = i0; i <= i1; ++i) {
                    double d = point_segment_distance(f.corner(i, j, k), pa, pb) - strut_radius;
                    double& cell = f.at(i, j, k);
                    cell = std::min(cell, d);
                }
            }
        }
    }
    return f;
}

ScalarField smooth(const ScalarField& field, int passes) {
    if (passes < 0) throw Error("smooth: negative pass count");
    ScalarField f = field;
    ScalarField tmp = field;
    auto pass_axis = [&](const ScalarField& in, ScalarField& out, int axis) {
        for (int k = 0; k < in.nz; ++k) {
            for (int j = 0; j < in.ny; ++j) {
                for (int i = 0; i < in.nx; ++i) {
                    int im = i, ip = i, jm = j, jp = j, km = k, kp = k;
                    if (axis == 0) {
                        im = std::max(0, i - 1);
                        ip = std::min(in.nx - 1, i + 1);
                    } else if (axis == 1) {
                        jm = std::max(0, j - 1);
                        jp = std::min(in.ny - 1, j + 1);
                    } else {
                        km = std::max(0, k - 1);
                        kp = std::min(in.nz - 1, k + 1);
                    }
                    out.at(i, j, k) =
                        (in.at(im, jm, km) + in.at(i, j, k) + in.at(ip, jp, kp)) / 3.0;
                }
            }
        }
    };
    for (int p = 0; p < passes; ++p) {
        pass_axis(f, tmp, 0);
        pass_axis(tmp, f, 1);
        pass_axis(f, tmp, 2);
        std::swap(f.values, tmp.values);
    }
    return f;
}

namespace {

Point3 interp_vertex(const Point3& pa, const Point3& pb, double va, double vb, double iso) {
    double denom = vb - va;
    double t = denom != 0.0 ? (iso - va) / denom : 0.5;
    t = std::clamp(t, 0.0, 1.0);
    return pa + (pb - pa) * t;
}

}  // namespace

TriMesh marching_cubes(const ScalarField& field, double iso) {
    using namespace detail;
    TriMesh mesh;
    // Vertices are keyed by the global grid edge they sit on, so neighboring
    // cells share them exactly.
    std::map<std::tuple<int, int, int, int>, int> edge_vertex;  // (axis, i, j, k) -> index

    auto edge_key = [&](int ci, int cj, int ck, int e) {
        const int* c0 = kCornerOffset[kEdgeCorners[e][0]];
        const int* c1 = kCornerOffset[kEdgeCorners[e][1]];
        int i0 = ci + c0[0], j0 = cj + c0[1], k0 = ck + c0[2];
        int i1 = ci + c1[0], j1 = cj + c1[1], k1 = ck + c1[2];
        if (std::tie(i1, j1, k1) < std::tie(i0, j0, k0)) {
            std::swap(i0, i1);
            std::swap(j0, j1);
            std::swap(k0, k1);
        }
        int axis = i1 != i0 ? 0 : (j1 != j0 ? 1 : 2);
        return std::make_tuple(axis, i0, j0, k0);
    };

    double corner_val[8];
    Point3 corner_pos[8];
    for (int k = 0; k + 1 < field.nz; ++k) {
        for (int j = 0; j + 1 < field.ny; ++j) {
            for (int i = 0; i + 1 < field.nx; ++i) {
                int cube = 0;
                for (int c = 0; c < 8; ++c) {
                    const int* off = kCornerOffset[c];
                    corner_val[c] = field.at(i + off[0], j + off[1], k + off[2]);
                    corner_pos[c] = field.corner(i + off[0], j + off[1], k + off[2]);
                    if (corner_val[c] < iso) cube |= 1 << c;
                }
                int edges = kEdgeTable[cube];
                if (edges == 0) continue;

                int edge_index[12];
                for (int e = 0; e < 12; ++e) {
                    if (!(edges & (1 << e))) continue;
                    auto key = edge_key(i, j, k, e);
                    auto it = edge_vertex.find(key);
                    if (it == edge_vertex.end()) {
                        int a = kEdgeCorners[e][0], b = kEdgeCorners[e][1];
                        mesh.vertices.push_back(interp_vertex(corner_pos[a], corner_pos[b],
                                                              corner_val[a], corner_val[b], iso));
                        it = edge_vertex.emplace(key, static_cast<int>(mesh.vertices.size()) - 1)
                                 .first;
                    }
                    edge_index[e] = it->second;
                }
                for (int t = 0; kTriTable[cube][t] != -1; t += 3) {
                    int a = edge_index[kTriTable[cube][t]];
                    int b = edge_index[kTriTable[cube][t + 1]];
                    int c = edge_index[kTriTable[cube][t + 2]];
                    if (a == b || b == c || a == c) continue;  // degenerate
                    mesh.triangles.push_back({a, b, c});
                }
            }
        }
    }

    // Drop exact-duplicate vertex positions produced when the isosurface
    // passes through a grid corner shared by several edges.
    std::map<std::tuple<double, double, double>, int> unique;
    std::vector<int> remap(mesh.vertices.size());
    std::vector<Point3> verts;
    for (size_t v = 0; v < mesh.vertices.size(); ++v) {
        const Point3& p = mesh.vertices[v];
        auto key = std::make_tuple(p.x, p.y, p.z);
        auto it = unique.find(key);
        if (it == unique.end()) {
            it = unique.emplace(key, static_cast<int>(verts.size())).first;
            verts.push_back(p);
        }
        remap[v] = it->second;
    }
    std::vector<std::array<int, 3>> tris;
    tris.reserve(mesh.triangles.size());
    for (auto& t : mesh.triangles) {
        std::array<int, 3> m{remap[t[0]], remap[t[1]], remap[t[2]]};
        if (m[0] == m[1] || m[1] == m[2] || m[0] == m[2]) continue;
        tris.push_back(m);
    }
    mesh.vertices = std::move(verts);
    mesh.triangles = std::move(tris);
    return mesh;
}

ScalarField sphere_sdf(double radius, int resolution, double padding) {
    ScalarField f;
    double extent = 2.0 * (radius + padding);
    f.spacing = extent / (resolution - 1);
    f.origin = {-radius - padding, -radius - padding, -radius - padding};
    f.nx = f.ny = f.nz = resolution;
    f.values.resize(static_cast<size_t>(resolution) * resolution * resolution);
    for (int k = 0; k < f.nz; ++k) {
        for (int j = 0; j < f.ny; ++j) {
            for (int i = 0; i < f.nx; ++i) {
                f.at(i, j, k) = f.corner(i, j, k).norm() - radius;
            }
        }
    }
    return f;
}

// ---------------------------------------------------------------------------
// Binary STL
// ---------------------------------------------------------------------------

static_assert(std::endian::native == std::endian::little, "STL writer assumes little-endian");

namespace {

void write_f32(std::ofstream& out, double v) {
    float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), 4);
}

Point3 triangle_normal(const Point3& a, const Point3& b, const Point3& c) {
    Point3 u = b - a, v = c - a;
    Point3 n{u.y * v.z - u.z * v.y, u.z * v.x - u.x * v.z, u.x * v.y - u.y * v.x};
    double len = n.norm();
    if (len > 0.0) n = n * (1.0 / len);
    return n;
}

}  // namespace

void export_stl(const TriMesh& mesh, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("export_stl: cannot open " + path);
    char header[80] = {};
    std::snprintf(header, sizeof(header), "webgen binary stl");
    out.write(header, 80);
    uint32_t count = static_cast<uint32_t>(mesh.triangles.size());
    out.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& t : mesh.triangles) {
        const Point3& a = mesh.vertices[t[0]];
        const Point3& b = mesh.vertices[t[1]];
        const Point3& c = mesh.vertices[t[2]];
        Point3 n = triangle_normal(a, b, c);
        for (const Point3* p : {&n, &a, &b, &c}) {
            write_f32(out, p->x);
            write_f32(out, p->y);
            write_f32(out, p->z);
        }
        uint16_t attr = 0;
        out.write(reinterpret_cast<const char*>(&attr), 2);
    }
    if (!out) throw Error("export_stl: write failed for " + path);
}

TriMesh parse_stl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("parse_stl: cannot open " + path);
    char header[80];
    in.read(header, 80);
    uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 4);
    if (!in) throw Error("parse_stl: truncated header in " + path);

    TriMesh mesh;
    std::map<std::tuple<float, float, float>, int> unique;
    for (uint32_t t = 0; t < count; ++t) {
        float buf[12];
        in.read(reinterpret_cast<char*>(buf), 48);
        uint16_t attr;
        in.read(reinterpret_cast<char*>(&attr), 2);
        if (!in) throw Error("parse_stl: truncated triangle data in " + path);
        std::array<int, 3> tri{};
        for (int v = 0; v < 3; ++v) {
            float x = buf[3 + 3 * v], y = buf[4 + 3 * v], z = buf[5 + 3 * v];
            auto key = std::make_tuple(x, y, z);
            auto it = unique.find(key);
            if (it == unique.end()) {
                it = unique.emplace(key, static_cast<int>(mesh.vertices.size())).first;
                mesh.vertices.push_back({x, y, z});
            }
            tri[v] = it->second;
        }
        mesh.triangles.push_back(tri);
    }
    return mesh;
}

}  // namespace webgen
