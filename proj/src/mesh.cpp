#include "thinhomog/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace thinhomog {

namespace {

constexpr double kGeomTol = 1e-12;

double signed_area(Vec2 a, Vec2 b, Vec2 c) {
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

} // namespace

void Mesh::finalize() {
    const int nn = node_count();
    if (node_dof.empty()) {
        node_dof.resize(nn);
        std::vector<int> remap(nn, -1);
        // Right nodes of periodic pairs alias their left partner's dof.
        std::vector<int> alias(nn, -1);
        for (auto [l, r] : periodic_pairs)
            alias[r] = l;
        int next = 0;
        for (int i = 0; i < nn; ++i) {
            int rep = alias[i] >= 0 ? alias[i] : i;
            if (remap[rep] < 0)
                remap[rep] = next++;
            node_dof[i] = remap[rep];
        }
        dof_count = next;
    }
    dof_node_.assign(dof_count, -1);
    for (int i = 0; i < nn; ++i)
        if (dof_node_[node_dof[i]] < 0)
            dof_node_[node_dof[i]] = i;

    area.resize(tris.size());
    grad.resize(tris.size());
    for (std::size_t t = 0; t < tris.size(); ++t) {
        Vec2 a = nodes[tris[t][0]], b = nodes[tris[t][1]], c = nodes[tris[t][2]];
        double A = signed_area(a, b, c);
        if (!(A > 0.0))
            throw std::runtime_error("mesh: triangle " + std::to_string(t) +
                                     " has non-positive area");
        area[t] = A;
        // grad of hat_k is the inward normal of the opposite edge over 2A
        grad[t][0] = {(b.y - c.y) / (2 * A), (c.x - b.x) / (2 * A)};
        grad[t][1] = {(c.y - a.y) / (2 * A), (a.x - c.x) / (2 * A)};
        grad[t][2] = {(a.y - b.y) / (2 * A), (b.x - a.x) / (2 * A)};
    }
    build_buckets();
}

double Mesh::total_area() const {
    double s = 0.0;
    for (double a : area)
        s += a;
    return s;
}

void Mesh::build_buckets() {
    buckets_.clear();
    if (tris.empty()) {
        bx_ = by_ = 0;
        return;
    }
    double x0 = nodes[0].x, x1 = x0, y0 = nodes[0].y, y1 = y0;
    for (const Vec2& n : nodes) {
        x0 = std::min(x0, n.x);
        x1 = std::max(x1, n.x);
        y0 = std::min(y0, n.y);
        y1 = std::max(y1, n.y);
    }
    double w = std::max(x1 - x0, 1e-300), h = std::max(y1 - y0, 1e-300);
    double T = static_cast<double>(tris.size());
    bx_ = std::clamp(static_cast<int>(std::ceil(std::sqrt(T * w / h))), 1, 2048);
    by_ = std::clamp(static_cast<int>(std::ceil(std::sqrt(T * h / w))), 1, 2048);
    bb_x0_ = x0;
    bb_y0_ = y0;
    bb_dx_ = w / bx_;
    bb_dy_ = h / by_;
    buckets_.assign(static_cast<std::size_t>(bx_) * by_, {});
    for (std::size_t t = 0; t < tris.size(); ++t) {
        double tx0 = nodes[tris[t][0]].x, tx1 = tx0, ty0 = nodes[tris[t][0]].y, ty1 = ty0;
        for (int k = 1; k < 3; ++k) {
            const Vec2& v = nodes[tris[t][k]];
            tx0 = std::min(tx0, v.x);
            tx1 = std::max(tx1, v.x);
            ty0 = std::min(ty0, v.y);
            ty1 = std::max(ty1, v.y);
        }
        int i0 = std::clamp(static_cast<int>((tx0 - bb_x0_) / bb_dx_), 0, bx_ - 1);
        int i1 = std::clamp(static_cast<int>((tx1 - bb_x0_) / bb_dx_), 0, bx_ - 1);
        int j0 = std::clamp(static_cast<int>((ty0 - bb_y0_) / bb_dy_), 0, by_ - 1);
        int j1 = std::clamp(static_cast<int>((ty1 - bb_y0_) / bb_dy_), 0, by_ - 1);
        for (int i = i0; i <= i1; ++i)
            for (int j = j0; j <= j1; ++j)
                buckets_[static_cast<std::size_t>(j) * bx_ + i].push_back(static_cast<int>(t));
    }
    // Bucket lists ascend by construction; locate() relies on that for tie-breaks.
}

Mesh::Location Mesh::best_in_bucket(Vec2 p, double snap) const {
    Location best;
    if (buckets_.empty())
        return best;
    int i = std::clamp(static_cast<int>((p.x - bb_x0_) / bb_dx_), 0, bx_ - 1);
    int j = std::clamp(static_cast<int>((p.y - bb_y0_) / bb_dy_), 0, by_ - 1);
    double best_violation = snap;
    for (int jj = std::max(0, j - 1); jj <= std::min(by_ - 1, j + 1); ++jj) {
        for (int ii = std::max(0, i - 1); ii <= std::min(bx_ - 1, i + 1); ++ii) {
            for (int t : buckets_[static_cast<std::size_t>(jj) * bx_ + ii]) {
                Vec2 a = nodes[tris[t][0]], b = nodes[tris[t][1]], c = nodes[tris[t][2]];
                double A = area[t];
                std::array<double, 3> bc = {signed_area(p, b, c) / A, signed_area(a, p, c) / A,
                                            signed_area(a, b, p) / A};
                // Convert the worst barycentric deficit to a physical distance via the
                // altitude of the opposite vertex (bary * altitude = edge distance).
                double violation = 0.0;
                for (int k = 0; k < 3; ++k) {
                    if (bc[k] < 0.0) {
                        Vec2 e = nodes[tris[t][(k + 2) % 3]] - nodes[tris[t][(k + 1) % 3]];
                        double alt = 2.0 * A / std::max(norm(e), 1e-300);
                        violation = std::max(violation, -bc[k] * alt);
                    }
                }
                bool better = violation < best_violation ||
                              (violation == best_violation && (best.tri < 0 || t < best.tri));
                if (violation <= snap && better) {
                    best_violation = violation;
                    best.tri = t;
                    best.bary = bc;
                }
            }
        }
    }
    if (best.tri >= 0) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) {
            best.bary[k] = std::max(best.bary[k], 0.0);
            s += best.bary[k];
        }
        for (int k = 0; k < 3; ++k)
            best.bary[k] /= s;
    }
    return best;
}

Mesh::Location Mesh::locate(Vec2 p) const {
    Location out;
    if (buckets_.empty())
        return out;
    int i = std::clamp(static_cast<int>((p.x - bb_x0_) / bb_dx_), 0, bx_ - 1);
    int j = std::clamp(static_cast<int>((p.y - bb_y0_) / bb_dy_), 0, by_ - 1);
    for (int t : buckets_[static_cast<std::size_t>(j) * bx_ + i]) {
        Vec2 a = nodes[tris[t][0]], b = nodes[tris[t][1]], c = nodes[tris[t][2]];
        double A = area[t];
        std::array<double, 3> bc = {signed_area(p, b, c) / A, signed_area(a, p, c) / A,
                                    signed_area(a, b, p) / A};
        if (bc[0] >= -kGeomTol && bc[1] >= -kGeomTol && bc[2] >= -kGeomTol) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) {
                bc[k] = std::max(bc[k], 0.0);
                s += bc[k];
            }
            for (int k = 0; k < 3; ++k)
                bc[k] /= s;
            out.tri = t; // first hit in ascending bucket order = lowest index
            out.bary = bc;
            return out;
        }
    }
    return out;
}

Mesh::Location Mesh::locate_snapped(Vec2 p, double snap) const {
    Location strict = locate(p);
    if (strict.tri >= 0)
        return strict;
    return best_in_bucket(p, snap);
}

NodalField make_field(const MeshPtr& mesh, double fill, double p, std::string role) {
    NodalField f;
    f.mesh = mesh;
    f.values.assign(mesh->dof_count, fill);
    f.p = p;
    f.role = std::move(role);
    return f;
}

NodalField sample_field(const MeshPtr& mesh, const std::function<double(double, double)>& f,
                        double p, std::string role) {
    NodalField out = make_field(mesh, 0.0, p, std::move(role));
    for (int d = 0; d < mesh->dof_count; ++d) {
        Vec2 pos = mesh->nodes[mesh->dof_node()[d]];
        out.values[d] = f(pos.x, pos.y);
    }
    return out;
}

MeshPtr build_graph_mesh(const std::function<double(double)>& h, double a, double b, int nx,
                         int ny, bool periodic) {
    if (nx < 1 || ny < 1)
        throw std::runtime_error("build_graph_mesh: nx and ny must be >= 1");
    if (!(b > a))
        throw std::runtime_error("build_graph_mesh: need b > a");

    auto mesh = std::make_shared<Mesh>();
    std::vector<double> height(nx + 1);
    for (int i = 0; i <= nx; ++i) {
        double x = a + (b - a) * i / nx;
        height[i] = h(x);
        if (!(height[i] > 0.0))
            throw std::runtime_error("build_graph_mesh: height must be positive at x=" +
                                     std::to_string(x));
    }
    if (periodic) {
        double scale = std::max({1.0, height[0], height[nx]});
        if (std::fabs(height[0] - height[nx]) > kGeomTol * scale)
            throw std::runtime_error("build_graph_mesh: periodic mesh needs h(a) == h(b)");
    }

    mesh->nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
    for (int i = 0; i <= nx; ++i) {
        double x = a + (b - a) * i / nx;
        for (int j = 0; j <= ny; ++j)
            mesh->nodes.push_back({x, height[i] * j / ny});
    }
    auto id = [ny](int i, int j) { return i * (ny + 1) + j; };

    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            // diagonal through the lower-left node (i, j)
            mesh->tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            mesh->tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }

    for (int j = 0; j < ny; ++j) {
        mesh->boundary.push_back({id(0, j), id(0, j + 1), BoundarySide::Left});
        mesh->boundary.push_back({id(nx, j), id(nx, j + 1), BoundarySide::Right});
    }
    for (int i = 0; i < nx; ++i) {
        mesh->boundary.push_back({id(i, 0), id(i + 1, 0), BoundarySide::Bottom});
        mesh->boundary.push_back({id(i, ny), id(i + 1, ny), BoundarySide::Top});
    }

    if (periodic)
        for (int j = 0; j <= ny; ++j)
            mesh->periodic_pairs.push_back({id(0, j), id(nx, j)});

    mesh->grid_nx = nx;
    mesh->grid_ny = ny;
    mesh->x_lo = a;
    mesh->x_hi = b;
    mesh->finalize();
    return mesh;
}

MeshPtr build_strip_mesh(const std::function<double(double)>& lower,
                         const std::function<double(double)>& upper, double a, double b, int nx,
                         int ny, double collapse_tol) {
    if (nx < 1 || ny < 1)
        throw std::runtime_error("build_strip_mesh: nx and ny must be >= 1");
    if (!(b > a))
        throw std::runtime_error("build_strip_mesh: need b > a");

    auto mesh = std::make_shared<Mesh>();
    std::vector<double> lo(nx + 1), gap(nx + 1);
    for (int i = 0; i <= nx; ++i) {
        double x = a + (b - a) * i / nx;
        lo[i] = lower(x);
        double g = upper(x) - lo[i];
        if (g < -collapse_tol)
            throw std::runtime_error("build_strip_mesh: upper < lower at x=" + std::to_string(x));
        gap[i] = std::max(g, 0.0);
    }

    for (int i = 0; i <= nx; ++i) {
        double x = a + (b - a) * i / nx;
        for (int j = 0; j <= ny; ++j)
            mesh->nodes.push_back({x, lo[i] + gap[i] * j / ny});
    }
    auto id = [ny](int i, int j) { return i * (ny + 1) + j; };

    // Keep only triangles with genuinely positive area; collapsed columns leave
    // coincident nodes that simply go unused.
    double dx = (b - a) / nx;
    for (int i = 0; i < nx; ++i) {
        bool left_flat = gap[i] <= collapse_tol;
        bool right_flat = gap[i + 1] <= collapse_tol;
        if (left_flat && right_flat)
            continue;
        for (int j = 0; j < ny; ++j) {
            double a1 = 0.5 * dx * (gap[i + 1] / ny); // (LL, LR, UR)
            double a2 = 0.5 * dx * (gap[i] / ny);     // (LL, UR, UL)
            if (a1 > collapse_tol * dx)
                mesh->tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            if (a2 > collapse_tol * dx)
                mesh->tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }

    mesh->grid_nx = nx;
    mesh->grid_ny = ny;
    mesh->x_lo = a;
    mesh->x_hi = b;
    if (!mesh->tris.empty())
        mesh->finalize();
    else {
        mesh->node_dof.resize(mesh->nodes.size());
        for (std::size_t i = 0; i < mesh->nodes.size(); ++i)
            mesh->node_dof[i] = static_cast<int>(i);
        mesh->dof_count = static_cast<int>(mesh->nodes.size());
    }
    return mesh;
}

double evaluate(const NodalField& field, Vec2 p, double snap) {
    const Mesh& m = *field.mesh;
    Mesh::Location loc = m.locate_snapped(p, snap);
    if (loc.tri < 0)
        throw std::runtime_error("evaluate: point (" + std::to_string(p.x) + ", " +
                                 std::to_string(p.y) + ") outside the mesh");
    double v = 0.0;
    for (int k = 0; k < 3; ++k)
        v += loc.bary[k] * field.values[m.node_dof[m.tris[loc.tri][k]]];
    return v;
}

NodalField interpolate(const NodalField& field, const MeshPtr& target, double snap) {
    NodalField out = make_field(target, 0.0, field.p, field.role);
    std::string offenders;
    int bad = 0;
    for (int d = 0; d < target->dof_count; ++d) {
        Vec2 p = target->nodes[target->dof_node()[d]];
        Mesh::Location loc = field.mesh->locate_snapped(p, snap);
        if (loc.tri < 0) {
            if (++bad <= 8)
                offenders += " (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
            continue;
        }
        double v = 0.0;
        for (int k = 0; k < 3; ++k)
            v += loc.bary[k] * field.values[field.mesh->node_dof[field.mesh->tris[loc.tri][k]]];
        out.values[d] = v;
    }
    if (bad > 0)
        throw std::runtime_error("interpolate: " + std::to_string(bad) +
                                 " target nodes outside the source domain:" + offenders);
    return out;
}

MeshAudit audit_mesh(const Mesh& mesh) {
    MeshAudit audit;
    audit.positive_areas = true;
    for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
        Vec2 a = mesh.nodes[mesh.tris[t][0]], b = mesh.nodes[mesh.tris[t][1]],
             c = mesh.nodes[mesh.tris[t][2]];
        if (!(signed_area(a, b, c) > 0.0)) {
            audit.positive_areas = false;
            audit.detail += "non-positive triangle " + std::to_string(t) + "; ";
        }
    }

    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : mesh.tris) {
        for (int k = 0; k < 3; ++k) {
            int u = t[k], v = t[(k + 1) % 3];
            edge_count[{std::min(u, v), std::max(u, v)}]++;
        }
    }
    audit.conforming = true;
    for (const auto& [e, c] : edge_count) {
        if (c == 1)
            audit.boundary_edges++;
        else if (c != 2) {
            audit.conforming = false;
            audit.detail += "edge (" + std::to_string(e.first) + "," + std::to_string(e.second) +
                            ") shared by " + std::to_string(c) + "; ";
        }
    }

    audit.periodic_consistent = true;
    if (!mesh.periodic_pairs.empty()) {
        double x0 = mesh.nodes[0].x, x1 = x0;
        for (const Vec2& n : mesh.nodes) {
            x0 = std::min(x0, n.x);
            x1 = std::max(x1, n.x);
        }
        double width = x1 - x0;
        for (auto [l, r] : mesh.periodic_pairs) {
            double scale = std::max(1.0, std::fabs(mesh.nodes[l].y));
            if (std::fabs(mesh.nodes[l].y - mesh.nodes[r].y) > kGeomTol * scale ||
                std::fabs((mesh.nodes[r].x - mesh.nodes[l].x) - width) > kGeomTol * (1.0 + width)) {
                audit.periodic_consistent = false;
                audit.detail += "bad periodic pair (" + std::to_string(l) + "," +
                                std::to_string(r) + "); ";
            }
            if (mesh.node_dof[l] != mesh.node_dof[r]) {
                audit.periodic_consistent = false;
                audit.detail += "pair not merged (" + std::to_string(l) + "," +
                                std::to_string(r) + "); ";
            }
        }
    }
    return audit;
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
    out << "nodes " << mesh.node_count() << " triangles " << mesh.triangle_count() << "\n";
    char buf[80];
    for (const Vec2& n : mesh.nodes) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", n.x, n.y);
        out << buf;
    }
    for (const auto& t : mesh.tris)
        out << t[0] << " " << t[1] << " " << t[2] << "\n";
    if (!mesh.periodic_pairs.empty()) {
        out << "periodic " << mesh.periodic_pairs.size() << "\n";
        for (auto [l, r] : mesh.periodic_pairs)
            out << l << " " << r << "\n";
    }
}

MeshPtr read_mesh(std::istream& in) {
    std::string word;
    int nn = 0, nt = 0;
    if (!(in >> word) || word != "nodes" || !(in >> nn) || !(in >> word) || word != "triangles" ||
        !(in >> nt))
        throw std::runtime_error("read_mesh: malformed header, expected 'nodes N triangles T'");
    if (nn < 3 || nt < 1)
        throw std::runtime_error("read_mesh: meaningless node/triangle counts");
    auto mesh = std::make_shared<Mesh>();
    mesh->nodes.resize(nn);
    for (int i = 0; i < nn; ++i)
        if (!(in >> mesh->nodes[i].x >> mesh->nodes[i].y))
            throw std::runtime_error("read_mesh: bad node line " + std::to_string(i));
    mesh->tris.resize(nt);
    for (int t = 0; t < nt; ++t) {
        auto& tri = mesh->tris[t];
        if (!(in >> tri[0] >> tri[1] >> tri[2]))
            throw std::runtime_error("read_mesh: bad triangle line " + std::to_string(t));
        for (int k = 0; k < 3; ++k)
            if (tri[k] < 0 || tri[k] >= nn)
                throw std::runtime_error("read_mesh: triangle " + std::to_string(t) +
                                         " references node " + std::to_string(tri[k]) +
                                         " out of range");
    }
    if (in >> word) {
        if (word != "periodic")
            throw std::runtime_error("read_mesh: unexpected trailing section '" + word + "'");
        int np = 0;
        if (!(in >> np))
            throw std::runtime_error("read_mesh: bad periodic count");
        mesh->periodic_pairs.resize(np);
        for (int i = 0; i < np; ++i) {
            auto& pr = mesh->periodic_pairs[i];
            if (!(in >> pr.first >> pr.second) || pr.first < 0 || pr.first >= nn ||
                pr.second < 0 || pr.second >= nn)
                throw std::runtime_error("read_mesh: bad periodic pair " + std::to_string(i));
        }
    }
    // Boundary tags are not serialized; recover them geometrically for terrain-like
    // meshes (bottom at min y, sides at the x extremes, everything else top).
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : mesh->tris)
        for (int k = 0; k < 3; ++k) {
            int u = t[k], v = t[(k + 1) % 3];
            edge_count[{std::min(u, v), std::max(u, v)}]++;
        }
    double x0 = mesh->nodes[0].x, x1 = x0, y0 = mesh->nodes[0].y;
    for (const Vec2& n : mesh->nodes) {
        x0 = std::min(x0, n.x);
        x1 = std::max(x1, n.x);
        y0 = std::min(y0, n.y);
    }
    for (const auto& [e, c] : edge_count) {
        if (c != 1)
            continue;
        Vec2 a = mesh->nodes[e.first], b = mesh->nodes[e.second];
        BoundarySide side = BoundarySide::Top;
        double tol = kGeomTol * (1.0 + std::fabs(x1 - x0));
        if (std::fabs(a.y - y0) <= tol && std::fabs(b.y - y0) <= tol)
            side = BoundarySide::Bottom;
        else if (std::fabs(a.x - x0) <= tol && std::fabs(b.x - x0) <= tol)
            side = BoundarySide::Left;
        else if (std::fabs(a.x - x1) <= tol && std::fabs(b.x - x1) <= tol)
            side = BoundarySide::Right;
        mesh->boundary.push_back({e.first, e.second, side});
    }
    mesh->finalize();
    return mesh;
}

void write_mesh_file(const std::string& path, const Mesh& mesh) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_mesh_file: cannot open " + path);
    write_mesh(out, mesh);
}

MeshPtr read_mesh_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("read_mesh_file: cannot open " + path);
    return read_mesh(in);
}

} // namespace thinhomog
