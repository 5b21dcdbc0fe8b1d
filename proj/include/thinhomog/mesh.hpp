#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace thinhomog {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }

enum class BoundarySide : std::uint8_t { Bottom, Top, Left, Right };

struct BoundaryEdge {
    int n0, n1;
    BoundarySide side;
};

// Conforming triangle mesh of a terrain-like region, counterclockwise triangles,
// optional periodic identification of the left and right node columns.
//
// Geometric nodes stay distinct; the periodic merge happens in the node->dof map,
// so element geometry always lives in physical coordinates.
class Mesh {
public:
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> tris;
    std::vector<int> node_dof;                      // node index -> merged dof index
    int dof_count = 0;
    std::vector<std::pair<int, int>> periodic_pairs; // (left node, right node)
    std::vector<BoundaryEdge> boundary;

    // Per-triangle cache, filled by finalize().
    std::vector<double> area;
    std::vector<std::array<Vec2, 3>> grad; // gradients of the three P1 hat functions

    // Structured provenance when built as a terrain/strip mesh (else zeros).
    int grid_nx = 0, grid_ny = 0;
    double x_lo = 0.0, x_hi = 0.0;

    void finalize(); // caches geometry, builds dof map and locator buckets

    double total_area() const;
    int triangle_count() const { return static_cast<int>(tris.size()); }
    int node_count() const { return static_cast<int>(nodes.size()); }

    // First node carrying each dof (representative for evaluation/interpolation).
    const std::vector<int>& dof_node() const { return dof_node_; }

    struct Location {
        int tri = -1;                    // -1 when the point is outside
        std::array<double, 3> bary{};    // clamped, sums to 1 when tri >= 0
    };

    // Strict containment: all barycentric coordinates >= -1e-12. Points on shared
    // edges report the lowest containing triangle index.
    Location locate(Vec2 p) const;

    // Containment with a physical slack: accepts the best triangle whose worst
    // edge violation, measured as a distance, is within snap.
    Location locate_snapped(Vec2 p, double snap) const;

private:
    std::vector<int> dof_node_;
    // Uniform bucket grid over the bounding box for point location.
    int bx_ = 0, by_ = 0;
    double bb_x0_ = 0, bb_y0_ = 0, bb_dx_ = 1, bb_dy_ = 1;
    std::vector<std::vector<int>> buckets_;
    void build_buckets();
    Location best_in_bucket(Vec2 p, double snap) const;
};

using MeshPtr = std::shared_ptr<const Mesh>;

// Field of one value per merged dof. p and the role tag ride along for reports.
struct NodalField {
    MeshPtr mesh;
    std::vector<double> values;
    double p = 2.0;
    std::string role;

    double at_node(int node) const { return values[mesh->node_dof[node]]; }
};

NodalField make_field(const MeshPtr& mesh, double fill = 0.0, double p = 2.0,
                      std::string role = "");
NodalField sample_field(const MeshPtr& mesh, const std::function<double(double, double)>& f,
                        double p = 2.0, std::string role = "");

// Terrain mesh under the graph of h over [a, b]: nx+1 equispaced columns, ny+1 nodes
// per column at fractions j/ny of h(x_i), quads split along the diagonal through the
// lower-left node. With periodic=true the left and right columns are identified
// (requires |h(a) - h(b)| <= 1e-12 relative).
MeshPtr build_graph_mesh(const std::function<double(double)>& h, double a, double b, int nx,
                         int ny, bool periodic);

// Mesh between two graphs; columns with gap below tol collapse and contribute no
// triangles (lower == upper everywhere gives an empty mesh).
MeshPtr build_strip_mesh(const std::function<double(double)>& lower,
                         const std::function<double(double)>& upper, double a, double b, int nx,
                         int ny, double collapse_tol = 1e-12);

// P1 evaluation of [field] at p, locating with the given physical snap tolerance.
// Throws if the point is outside even after snapping.
double evaluate(const NodalField& field, Vec2 p, double snap = 1e-9);

// Resamples a field onto the target mesh; target nodes must land inside the source
// domain within snap (offenders are listed in the error message).
NodalField interpolate(const NodalField& field, const MeshPtr& target, double snap = 1e-9);

struct MeshAudit {
    bool conforming = false;        // every interior edge shared by exactly 2 triangles
    bool positive_areas = false;
    bool periodic_consistent = false; // pairs have equal y and x offset == domain width
    int boundary_edges = 0;
    std::string detail;
    bool pass() const { return conforming && positive_areas && periodic_consistent; }
};

MeshAudit audit_mesh(const Mesh& mesh);

// Plain-text round-trippable format:
//   nodes N triangles T
//   N lines "x y", T lines "i j k", then optional "periodic P" and P lines "l r".
void write_mesh(std::ostream& out, const Mesh& mesh);
MeshPtr read_mesh(std::istream& in);
void write_mesh_file(const std::string& path, const Mesh& mesh);
MeshPtr read_mesh_file(const std::string& path);

} // namespace thinhomog
