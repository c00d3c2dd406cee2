#include "resokit/field/solver.hpp"

#include "resokit/error.hpp"

#include <algorithm>
#include <cmath>

namespace resokit::field {

double MeshOptions::effective_h_min() const {
    return h_min / std::ldexp(1.0, refinement);
}

double MeshOptions::effective_growth() const {
    return std::pow(growth, 1.0 / std::ldexp(1.0, refinement));
}

double MeshOptions::cap_scale() const {
    return 1.0 / std::ldexp(1.0, refinement);
}

SolverDomain SolverDomain::for_cpw(const CpwGeometry& geom, const LossyLayerSpec& layer) {
    geom.validate();
    SolverDomain d;
    d.geometry = geom;
    d.layer = layer;
    d.domain_half_width = 10.0 * geom.g;
    d.domain_height = std::max(geom.h, 10.0 * geom.g);
    return d;
}

SolverDomain SolverDomain::for_asr(const AsrGeometry& geom, const LossyLayerSpec& layer) {
    geom.validate();
    SolverDomain d;
    d.geometry = geom;
    d.layer = layer;
    d.domain_half_width = 10.0 * geom.r_out();
    d.domain_height = 10.0 * geom.r_out();
    return d;
}

void SolverDomain::validate() const {
    double extent = 0.0;
    if (const auto* cpw = std::get_if<CpwGeometry>(&geometry)) {
        cpw->validate();
        extent = cpw->g;
    } else {
        const auto& asr = std::get<AsrGeometry>(geometry);
        asr.validate();
        if (asr.turns < 1)
            throw DomainError("ASR model needs at least one ring");
        extent = asr.r_out();
    }
    if (domain_half_width < 10.0 * extent * (1.0 - 1e-12) ||
        domain_height < 10.0 * extent * (1.0 - 1e-12))
        throw DomainError("solver box must be at least 10x the conductor extent");
    if (!(substrate_thickness > 0.0) || !(film_thickness > 0.0))
        throw DomainError("substrate and film thickness must be positive");
    if (!(layer.thickness > 0.0) || !(layer.edge_extent > layer.thickness) || !(layer.eps > 0.0))
        throw DomainError("lossy layer needs 0 < thickness < edge_extent and eps > 0");
}

std::vector<double> ring_potentials(const AsrGeometry& geom, double v0) {
    geom.validate();
    std::vector<double> volts;
    for (int k = 0; k < geom.turns; ++k)
        volts.push_back(asr_voltage_profile(geom, geom.r_in + k * geom.pitch + 0.5 * geom.w, v0));
    return volts;
}

namespace {

struct Edge {
    double x;
    int dir;  // +1 when the gap is at larger x
};

struct Rect {
    double x0, x1, y0, y1;
    CellKind kind;
};

// Shared construction for both models: conductors on the substrate surface
// (y = 0), film of thickness T, lossy layers of thickness t inside the
// edge bands. `near_zone` bounds the region that gets the fine spacing cap.
GridProblem build_layered(const SolverDomain& d, Symmetry symmetry,
                          std::vector<Conductor> conductors, const std::vector<Edge>& edges,
                          double feature, double near_zone) {
    const double t = d.layer.thickness;
    const double e = d.layer.edge_extent;
    const double T = d.film_thickness;
    const double h_min = std::min(d.mesh.effective_h_min(), t / 4.0);
    const double growth = d.mesh.effective_growth();
    const double near_cap = feature * d.mesh.near_cap_fraction * d.mesh.cap_scale();

    AxisSpec ax;
    ax.lo = 0.0;
    ax.hi = d.domain_half_width;
    ax.h_min = h_min;
    ax.growth = growth;
    ax.far_cap = d.domain_half_width / 20.0 * d.mesh.cap_scale();
    ax.cap_zones.push_back({Interval{0.0, near_zone}, near_cap});
    for (const auto& c : conductors) {
        ax.breakpoints.push_back(c.x0);
        ax.breakpoints.push_back(c.x1);
    }
    for (const auto& edge : edges) {
        for (double off : {-e, -t, t, e})
            ax.breakpoints.push_back(edge.x + off);
        ax.fine_points.push_back(edge.x);
        ax.fine_points.push_back(edge.x + edge.dir * t);
    }

    AxisSpec ay;
    ay.lo = -d.substrate_thickness;
    ay.hi = d.domain_height;
    ay.h_min = h_min;
    ay.growth = growth;
    ay.far_cap = std::max(d.domain_height, d.substrate_thickness) / 20.0 * d.mesh.cap_scale();
    ay.cap_zones.push_back({Interval{-near_zone, near_zone}, std::max(near_cap, 0.0)});
    ay.breakpoints = {-t, 0.0, T, T + t};
    ay.fine_points = {-t, 0.0, T, T + t};

    GridProblem p;
    p.symmetry = symmetry;
    p.xs = graded_axis(ax);
    p.ys = graded_axis(ay);
    const std::size_t cells = (p.nx() - 1) * (p.ny() - 1);
    p.cell_eps.assign(cells, d.eps_air);
    p.cell_kind.assign(cells, CellKind::Air);
    p.conductors = std::move(conductors);

    std::vector<Rect> layers;
    InterfaceMap& map = p.interfaces;
    map.substrate_surface = 0.0;
    map.metal_top = T;
    map.eps_air = d.eps_air;
    map.eps_substrate = d.eps_si;
    map.layer_thickness = t;
    map.edge_extent = e;
    for (const auto& c : p.conductors)
        map.metal.push_back({c.x0, c.x1});
    for (const auto& edge : edges) {
        const double in = edge.x - edge.dir * e;   // band end on the metal side
        const double out = edge.x + edge.dir * e;  // band end on the gap side
        const double side = edge.x + edge.dir * t;
        const Interval metal_band{std::min(in, edge.x), std::max(in, edge.x)};
        const Interval gap_band{std::min(out, edge.x), std::max(out, edge.x)};
        map.metal_bands.push_back(metal_band);
        map.gap_bands.push_back(gap_band);
        layers.push_back({metal_band.lo, metal_band.hi, -t, 0.0, CellKind::LayerMS});
        layers.push_back({gap_band.lo, gap_band.hi, -t, 0.0, CellKind::LayerSA});
        layers.push_back({std::min(side, edge.x), std::max(side, edge.x), 0.0, T + t,
                          CellKind::LayerMA});
        layers.push_back({metal_band.lo, metal_band.hi, T, T + t, CellKind::LayerMA});
    }

    for (std::size_t j = 0; j + 1 < p.ny(); ++j) {
        const double yc = 0.5 * (p.ys[j] + p.ys[j + 1]);
        for (std::size_t i = 0; i + 1 < p.nx(); ++i) {
            const double xc = 0.5 * (p.xs[i] + p.xs[i + 1]);
            const std::size_t c = p.cell_index(i, j);
            if (yc < 0.0) {
                p.cell_kind[c] = CellKind::Substrate;
                p.cell_eps[c] = d.eps_si;
            }
            for (const auto& r : layers)
                if (xc > r.x0 && xc < r.x1 && yc > r.y0 && yc < r.y1) {
                    p.cell_kind[c] = r.kind;
                    p.cell_eps[c] = d.layer.eps;
                }
        }
    }
    p.mark_conductors();
    return p;
}

} // namespace

GridProblem build_cpw_problem(const SolverDomain& d, double center_potential) {
    d.validate();
    const auto* geom = std::get_if<CpwGeometry>(&d.geometry);
    if (!geom)
        throw DomainError("build_cpw_problem needs a CPW geometry");
    const double half = 0.5 * geom->w;
    const double ground = 0.5 * geom->g;
    const double T = d.film_thickness;
    std::vector<Conductor> conductors{{0.0, half, 0.0, T, center_potential},
                                      {ground, d.domain_half_width, 0.0, T, 0.0}};
    std::vector<Edge> edges{{half, +1}, {ground, -1}};
    const double feature = std::min(geom->w, geom->gap());
    GridProblem p = build_layered(d, Symmetry::Planar, std::move(conductors), edges, feature,
                                  2.0 * geom->g);
    p.left = Boundary::Neumann;
    p.mirror_factor = 2.0;
    return p;
}

GridProblem build_asr_problem(const SolverDomain& d, const std::vector<double>& ring_volts) {
    d.validate();
    const auto* geom = std::get_if<AsrGeometry>(&d.geometry);
    if (!geom)
        throw DomainError("build_asr_problem needs an ASR geometry");
    if (ring_volts.size() != static_cast<std::size_t>(geom->turns))
        throw DomainError("one potential per ring required");
    const double T = d.film_thickness;
    std::vector<Conductor> conductors;
    std::vector<Edge> edges;
    for (int k = 0; k < geom->turns; ++k) {
        const double r0 = geom->r_in + k * geom->pitch;
        const double r1 = r0 + geom->w;
        conductors.push_back({r0, r1, 0.0, T, ring_volts[static_cast<std::size_t>(k)]});
        if (r0 > 0.0)
            edges.push_back({r0, -1});
        edges.push_back({r1, +1});
    }
    const double spacing = geom->pitch - geom->w;
    const double feature = spacing > 0.0 ? std::min(geom->w, spacing) : geom->w;
    GridProblem p = build_layered(d, Symmetry::Axisymmetric, std::move(conductors), edges, feature,
                                  geom->r_out() + geom->pitch);
    p.left = Boundary::Neumann;
    p.mirror_factor = 1.0;
    return p;
}

FieldSolution solve_cpw_cross_section(const SolverDomain& domain, double center_potential) {
    return solve(build_cpw_problem(domain, center_potential));
}

FieldSolution solve_asr_axisymmetric(const SolverDomain& domain,
                                     const std::vector<double>& ring_volts) {
    return solve(build_asr_problem(domain, ring_volts));
}

} // namespace resokit::field
