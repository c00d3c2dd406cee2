#include "resokit/field/participation.hpp"

#include "resokit/constants.hpp"
#include "resokit/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace resokit::field {

namespace {

std::size_t row_at(const GridProblem& m, double y) {
    const double tol = 1e-9 * (m.ys.back() - m.ys.front());
    const auto it = std::lower_bound(m.ys.begin(), m.ys.end(), y - tol);
    if (it == m.ys.end() || std::abs(*it - y) > tol)
        throw SolverError("interface surface is not a grid line");
    return static_cast<std::size_t>(it - m.ys.begin());
}

bool in_any(const std::vector<Interval>& spans, double x) {
    return std::any_of(spans.begin(), spans.end(), [x](const Interval& s) { return s.contains(x); });
}

double surface_measure(const GridProblem& m, std::size_t i) {
    const double x0 = m.xs[i], x1 = m.xs[i + 1];
    if (m.symmetry == Symmetry::Planar)
        return m.mirror_factor * (x1 - x0);
    return constants::pi * (x1 * x1 - x0 * x0);
}

CellKind layer_kind(Interface iface) {
    switch (iface) {
    case Interface::MA: return CellKind::LayerMA;
    case Interface::MS: return CellKind::LayerMS;
    case Interface::SA: return CellKind::LayerSA;
    }
    return CellKind::LayerMA;
}

void check_layer(const FieldSolution& sol, const LossyLayerSpec& layer) {
    const auto& map = sol.mesh.interfaces;
    if (map.layer_thickness > 0.0 &&
        (std::abs(map.layer_thickness - layer.thickness) > 1e-6 * layer.thickness ||
         std::abs(map.edge_extent - layer.edge_extent) > 1e-6 * layer.edge_extent))
        throw DomainError("layer spec does not match the meshed edge layer");
}

} // namespace

std::string to_string(Interface iface) {
    switch (iface) {
    case Interface::MA: return "MA";
    case Interface::MS: return "MS";
    case Interface::SA: return "SA";
    }
    return "?";
}

double simulated_permittivity(const InterfaceMap& map, Interface iface) {
    switch (iface) {
    case Interface::MA: return map.eps_air;
    case Interface::MS: return map.eps_substrate;
    case Interface::SA: return 0.5 * (map.eps_air + map.eps_substrate);
    }
    return 1.0;
}

double participation_internal(const FieldSolution& sol, const LossyLayerSpec& layer,
                              Interface iface) {
    check_layer(sol, layer);
    if (!(sol.total_energy > 0.0))
        return 0.0;
    const GridProblem& m = sol.mesh;
    const InterfaceMap& map = m.interfaces;
    const double eps_i = layer.eps;
    const double eps_sim = simulated_permittivity(map, iface);

    const std::size_t row = row_at(m, iface == Interface::MA ? map.metal_top : map.substrate_surface);
    double energy = 0.0;
    for (std::size_t i = 0; i + 1 < m.nx(); ++i) {
        const double xc = 0.5 * (m.xs[i] + m.xs[i + 1]);
        const bool under_metal = in_any(map.metal, xc);
        double e_tan = 0.0, e_norm_sim = 0.0;
        switch (iface) {
        case Interface::MA:
            if (!under_metal || in_any(map.metal_bands, xc) || row + 1 >= m.ny())
                continue;
            e_norm_sim = sol.cell_ey(i, row);
            break;
        case Interface::MS:
            if (!under_metal || in_any(map.metal_bands, xc) || row == 0)
                continue;
            e_norm_sim = sol.cell_ey(i, row - 1);
            break;
        case Interface::SA: {
            if (under_metal || in_any(map.gap_bands, xc) || row == 0 || row + 1 >= m.ny())
                continue;
            // Normal displacement is continuous; average the two one-sided estimates.
            const double d_above = m.cell_eps[m.cell_index(i, row)] * sol.cell_ey(i, row);
            const double d_below = m.cell_eps[m.cell_index(i, row - 1)] * sol.cell_ey(i, row - 1);
            e_norm_sim = 0.5 * (d_above + d_below) / eps_sim;
            break;
        }
        }
        e_tan = -(sol.node_potential(i + 1, row) - sol.node_potential(i, row)) /
                (m.xs[i + 1] - m.xs[i]);
        const double e_norm_layer = eps_sim / eps_i * e_norm_sim;
        energy += 0.5 * constants::eps0 * eps_i * (e_tan * e_tan + e_norm_layer * e_norm_layer) *
                  layer.thickness * surface_measure(m, i);
    }
    return energy / sol.total_energy;
}

double participation_edge(const FieldSolution& sol, const LossyLayerSpec& layer, Interface iface) {
    check_layer(sol, layer);
    if (!(sol.total_energy > 0.0))
        return 0.0;
    const GridProblem& m = sol.mesh;
    const CellKind kind = layer_kind(iface);
    double energy = 0.0;
    for (std::size_t j = 0; j + 1 < m.ny(); ++j)
        for (std::size_t i = 0; i + 1 < m.nx(); ++i)
            if (m.cell_kind[m.cell_index(i, j)] == kind)
                energy += sol.cell_energy(i, j);
    return energy / sol.total_energy;
}

ParticipationReport participation_from_solution(const FieldSolution& sol,
                                                const LossyLayerSpec& layer) {
    ParticipationReport r;
    r.edge_ma = participation_edge(sol, layer, Interface::MA);
    r.edge_ms = participation_edge(sol, layer, Interface::MS);
    r.edge_sa = participation_edge(sol, layer, Interface::SA);
    r.p_ma = participation_internal(sol, layer, Interface::MA) + r.edge_ma;
    r.p_ms = participation_internal(sol, layer, Interface::MS) + r.edge_ms;
    r.p_sa = participation_internal(sol, layer, Interface::SA) + r.edge_sa;
    r.p_tot = r.p_ma + r.p_ms + r.p_sa;
    r.diagnostics.cells = sol.diagnostics.cells;
    r.diagnostics.unknowns = sol.diagnostics.unknowns;
    r.diagnostics.total_energy = sol.total_energy;
    r.diagnostics.relative_residual = sol.diagnostics.relative_residual;
    return r;
}

namespace {

FieldSolution solve_domain(const SolverDomain& d) {
    if (const auto* asr = std::get_if<AsrGeometry>(&d.geometry))
        return solve_asr_axisymmetric(d, ring_potentials(*asr, 1.0));
    return solve_cpw_cross_section(d, 1.0);
}

double rel_change(double a, double b) {
    return std::abs(b - a) / std::max(std::abs(a), 1e-300);
}

} // namespace

ParticipationReport participation_report(SolverDomain domain, const ReportOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    domain.mesh = options.mesh;
    ParticipationReport report = participation_from_solution(solve_domain(domain), domain.layer);
    report.diagnostics.refinement = domain.mesh.refinement;

    if (options.check_convergence) {
        SolverDomain finer = domain;
        finer.mesh.refinement += 1;
        const FieldSolution fine_sol = solve_domain(finer);
        const ParticipationReport fine = participation_from_solution(fine_sol, finer.layer);
        auto& diag = report.diagnostics;
        diag.energy_change = rel_change(report.diagnostics.total_energy, fine.diagnostics.total_energy);
        diag.max_relative_change = std::max({rel_change(report.p_ma, fine.p_ma),
                                             rel_change(report.p_ms, fine.p_ms),
                                             rel_change(report.p_sa, fine.p_sa)});
        diag.edge_change = std::max({rel_change(report.edge_ma, fine.edge_ma),
                                     rel_change(report.edge_ms, fine.edge_ms),
                                     rel_change(report.edge_sa, fine.edge_sa)});
        diag.converged = diag.max_relative_change < options.convergence_tolerance;
        if (!diag.converged)
            throw SolverError("participation ratios changed by " +
                              std::to_string(100.0 * diag.max_relative_change) +
                              "% on refinement");
    }
    report.diagnostics.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

ParticipationReport participation_report(const CpwGeometry& geom, const LossyLayerSpec& layer,
                                         const ReportOptions& options) {
    return participation_report(SolverDomain::for_cpw(geom, layer), options);
}

ParticipationReport participation_report(const AsrGeometry& geom, const LossyLayerSpec& layer,
                                         const ReportOptions& options) {
    return participation_report(SolverDomain::for_asr(geom, layer), options);
}

} // namespace resokit::field
