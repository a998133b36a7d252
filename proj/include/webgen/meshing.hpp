#pragma once

#include <array>
#include <string>
#include <vector>

#include "webgen/graph.hpp"

namespace webgen {

// Uniform 3D grid of signed distances sampled at voxel corners. Negative
// inside, positive outside, zero on the surface.
struct ScalarField {
    Point3 origin;
    double spacing = 1.0;
    int nx = 0, ny = 0, nz = 0;
    std::vector<double> values;

    size_t index(int i, int j, int k) const {
        return (static_cast<size_t>(k) * ny + j) * nx + i;
    }
    double at(int i, int j, int k) const { return values[index(i, j, k)]; }
    double& at(int i, int j, int k) { return values[index(i, j, k)]; }
    Point3 corner(int i, int j, int k) const {
        return {origin.x + i * spacing, origin.y + j * spacing, origin.z + k * spacing};
    }
};

struct TriMesh {
    std::vector<Point3> vertices;
    std::vector<std::array<int, 3>> triangles;  // outward orientation
};

// Exact capsule-union distance: min over edges of (point-segment distance -
// radius). The full field everywhere, used by tests and probes.
double capsule_union_distance(const Graph& g, double radius, const Point3& p);

// Signed distance grid for the web's strut surface. `resolution` is the voxel
// count along the longest bounding dimension. Values saturate at a narrow
// band above the largest distance that matters for meshing, which keeps the
// field 1-Lipschitz and the zero set exact.
ScalarField web_sdf(const Graph& g, double strut_radius, int resolution);

// Separable 3x3x3 box filter, `passes` times, clamped at the boundary.
ScalarField smooth(const ScalarField& field, int passes);

// Standard 256-case marching cubes with linear interpolation along cell
// edges. Triangles are oriented outward (toward positive field values) and
// emitted in deterministic cell order; duplicate vertices are welded.
TriMesh marching_cubes(const ScalarField& field, double iso = 0.0);

// Analytic field helper for tests and calibration.
ScalarField sphere_sdf(double radius, int resolution, double padding);

// Binary STL, little-endian: 80-byte header, uint32 triangle count, then per
// triangle the normal and three vertices as float32 plus a zero attribute.
void export_stl(const TriMesh& mesh, const std::string& path);
TriMesh parse_stl(const std::string& path);

}  // namespace webgen
