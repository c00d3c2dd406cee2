#pragma once

// Surface participation ratios of thin lossy interface layers.
//
// Away from conductor edges the layer is not meshed; its field follows from
// the simulated surface field through tangential-E and normal-D continuity.
// Inside the edge bands the layer is part of the mesh and its energy is
// integrated directly.

#include "resokit/design.hpp"
#include "resokit/field/mesh.hpp"
#include "resokit/field/solver.hpp"

#include <string>

namespace resokit::field {

enum class Interface { MA, MS, SA };

std::string to_string(Interface iface);

/// Simulation-side permittivity assumed at each interface: air above metal,
/// substrate below metal, and the air/substrate mean on exposed substrate.
double simulated_permittivity(const InterfaceMap& map, Interface iface);

/// Surface-integral contribution outside the edge bands.
double participation_internal(const FieldSolution& sol, const LossyLayerSpec& layer,
                              Interface iface);

/// Energy fraction in the explicitly meshed layer cells of `iface`.
double participation_edge(const FieldSolution& sol, const LossyLayerSpec& layer,
                          Interface iface);

struct ParticipationDiagnostics {
    std::size_t cells = 0;
    std::size_t unknowns = 0;
    int refinement = 0;
    double total_energy = 0.0;
    double energy_change = 0.0;          // |U(r+1) − U(r)| / U(r)
    double max_relative_change = 0.0;    // largest |p_i(r+1) − p_i(r)| / p_i(r)
    double edge_change = 0.0;            // same for the edge-band parts alone
    double relative_residual = 0.0;
    bool converged = false;
    double seconds = 0.0;
};

struct ParticipationReport {
    std::string label;
    double p_ma = 0.0, p_ms = 0.0, p_sa = 0.0, p_tot = 0.0;
    double edge_ma = 0.0, edge_ms = 0.0, edge_sa = 0.0;
    ParticipationDiagnostics diagnostics;
};

struct ReportOptions {
    MeshOptions mesh;
    bool check_convergence = true;     // re-solve one level finer and compare
    double convergence_tolerance = 0.05;
};

/// Participation ratios from one solved field.
ParticipationReport participation_from_solution(const FieldSolution& sol,
                                                const LossyLayerSpec& layer);

/// Solves the structure, evaluates all three interfaces and, when requested,
/// repeats at the next refinement level. Throws SolverError when the
/// refinement changes any ratio by more than the tolerance.
ParticipationReport participation_report(const CpwGeometry& geom, const LossyLayerSpec& layer = {},
                                         const ReportOptions& options = {});
ParticipationReport participation_report(const AsrGeometry& geom, const LossyLayerSpec& layer = {},
                                         const ReportOptions& options = {});
ParticipationReport participation_report(SolverDomain domain, const ReportOptions& options = {});

} // namespace resokit::field
