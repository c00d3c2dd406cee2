#pragma once

// Cross-section (CPW) and concentric-ring (ASR) electrostatic models with
// explicitly meshed lossy layers near every gap-facing conductor edge.

#include "resokit/design.hpp"
#include "resokit/field/mesh.hpp"

#include <variant>
#include <vector>

namespace resokit::field {

/// Hypothetical amorphous interface layer.
struct LossyLayerSpec {
    double thickness = 3e-9;
    double eps = 10.0;
    double edge_extent = 100e-9;  // band next to each edge where the layer is meshed
};

struct MeshOptions {
    double h_min = 0.5e-9;          // smallest spacing, at conductor edges and layer faces
    double growth = 1.3;            // neighbouring-cell size ratio
    double near_cap_fraction = 0.125;  // spacing cap near conductors, in units of the smallest feature
    int refinement = 0;             // each level halves every spacing

    double effective_h_min() const;
    double effective_growth() const;
    double cap_scale() const;
};

struct SolverDomain {
    std::variant<CpwGeometry, AsrGeometry> geometry;
    double domain_half_width = 0.0;     // x (CPW, from the mirror plane) or r (ASR) extent
    double domain_height = 0.0;         // air above the substrate surface
    double substrate_thickness = 300e-6;
    double eps_air = 1.0;
    double eps_si = 11.45;
    double film_thickness = 100e-9;
    LossyLayerSpec layer;
    MeshOptions mesh;

    /// Defaults: grounded box 10× the structure (CPW: center plus gaps; ASR: r_out),
    /// CPW lid at the shield height h.
    static SolverDomain for_cpw(const CpwGeometry& geom, const LossyLayerSpec& layer = {});
    static SolverDomain for_asr(const AsrGeometry& geom, const LossyLayerSpec& layer = {});

    void validate() const;
};

/// Potential of each ring of the concentric-ring model: ring k spans
/// [r_in + k·p, r_in + k·p + w] and takes V at its center radius.
std::vector<double> ring_potentials(const AsrGeometry& geom, double v0 = 1.0);

GridProblem build_cpw_problem(const SolverDomain& domain, double center_potential = 1.0);
GridProblem build_asr_problem(const SolverDomain& domain, const std::vector<double>& ring_volts);

/// Center conductor at `center_potential`, ground planes and box at 0 V.
FieldSolution solve_cpw_cross_section(const SolverDomain& domain, double center_potential = 1.0);

FieldSolution solve_asr_axisymmetric(const SolverDomain& domain,
                                     const std::vector<double>& ring_volts);

} // namespace resokit::field
