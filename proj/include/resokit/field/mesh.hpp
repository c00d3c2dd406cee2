#pragma once

// Electrostatic solver on tensor-product rectangular grids.
//
// Potentials live on grid nodes, permittivity on cells. Each cell stores its
// energy as the sum of four half-edge contributions, which is the same
// stiffness as linear elements on the cell split into two right triangles
// (planar case). With the axisymmetric r-weighting the discrete operator
// reduces to the standard cylindrical five-point stencil on uniform grids.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace resokit::field {

enum class Symmetry {
    Planar,        // (x, y) cross-section, energies per unit length
    Axisymmetric,  // (r, z) half-plane, energies per full revolution
};

enum class CellKind : std::uint8_t { Air, Substrate, Metal, LayerMA, LayerMS, LayerSA };

enum class Boundary {
    Dirichlet,  // held at GridProblem::boundary_potential
    Neumann,    // zero normal field (mirror plane or symmetry axis)
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const { return x > lo && x < hi; }
};

/// A conductor with a fixed potential occupying a grid-aligned rectangle.
struct Conductor {
    double x0 = 0.0, x1 = 0.0;
    double y0 = 0.0, y1 = 0.0;
    double potential = 0.0;
};

/// Where the lossy interfaces sit relative to the grid. Spans within
/// `edge_extent` of a gap-facing conductor edge are meshed explicitly and
/// excluded from the surface integrals.
struct InterfaceMap {
    double substrate_surface = 0.0;   // y of exposed substrate and conductor bottoms
    double metal_top = 0.0;           // y of conductor tops
    std::vector<Interval> metal;      // conductor footprints on the substrate
    std::vector<Interval> metal_bands;
    std::vector<Interval> gap_bands;
    double eps_air = 1.0;
    double eps_substrate = 11.45;
    double layer_thickness = 0.0;     // thickness of the explicitly meshed layer
    double edge_extent = 0.0;
};

struct GridProblem {
    Symmetry symmetry = Symmetry::Planar;
    std::vector<double> xs;             // strictly increasing node coordinates
    std::vector<double> ys;
    std::vector<double> cell_eps;       // relative permittivity, (xs.size()-1)*(ys.size()-1)
    std::vector<CellKind> cell_kind;
    std::vector<Conductor> conductors;
    Boundary left = Boundary::Neumann;
    Boundary right = Boundary::Dirichlet;
    Boundary bottom = Boundary::Dirichlet;
    Boundary top = Boundary::Dirichlet;
    double boundary_potential = 0.0;
    /// Multiplier turning half-domain energies into full-structure energies
    /// (2 when the left boundary is a planar mirror plane).
    double mirror_factor = 1.0;
    InterfaceMap interfaces;

    std::size_t nx() const { return xs.size(); }
    std::size_t ny() const { return ys.size(); }
    std::size_t cell_index(std::size_t i, std::size_t j) const { return j * (nx() - 1) + i; }
    std::size_t node_index(std::size_t i, std::size_t j) const { return j * nx() + i; }

    /// Uniform-material problem on the given grid lines.
    static GridProblem uniform(Symmetry symmetry, std::vector<double> xs, std::vector<double> ys,
                               double eps);

    /// Marks every cell whose center lies inside a conductor as metal.
    void mark_conductors();
    void validate() const;
};

struct SolveDiagnostics {
    std::size_t unknowns = 0;
    std::size_t cells = 0;
    double relative_residual = 0.0;
    int refinement_steps = 0;
    std::string backend;
};

struct FieldSolution {
    GridProblem mesh;
    std::vector<double> potential;      // volts, one per node
    std::vector<std::uint8_t> fixed;    // 1 where the node is a Dirichlet node
    double total_energy = 0.0;          // J/m (planar) or J (axisymmetric)
    SolveDiagnostics diagnostics;

    double node_potential(std::size_t i, std::size_t j) const {
        return potential[mesh.node_index(i, j)];
    }
    /// Electrostatic energy stored in one cell, full-structure normalization.
    double cell_energy(std::size_t i, std::size_t j) const;
    /// Cell-averaged field components (V/m).
    double cell_ex(std::size_t i, std::size_t j) const;
    double cell_ey(std::size_t i, std::size_t j) const;
    /// Area element of the cell including the 2π r Jacobian and mirror factor.
    double cell_measure(std::size_t i, std::size_t j) const;
    /// Σ over cells of cell_energy, evaluated independently of the matrix.
    double integrated_energy() const;
    /// ½ φᵀAφ with the assembled operator.
    double quadratic_form_energy() const;
};

/// Assembles and solves the discrete Laplace problem. Throws SolverError when
/// the factorization fails or the residual stays above 1e-10.
FieldSolution solve(GridProblem problem);

/// Writes nodes and quadrilateral elements as plain text.
void write_mesh(std::ostream& out, const FieldSolution& solution);

/// Options for graded axes: spacing grows geometrically from `h_min` at each
/// fine point and is capped by the zone caps (or `far_cap` elsewhere).
struct AxisSpec {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> breakpoints;
    std::vector<double> fine_points;
    std::vector<std::pair<Interval, double>> cap_zones;
    double far_cap = 0.0;
    double h_min = 1e-9;
    double growth = 1.3;
};

/// Node coordinates on [lo, hi] containing every breakpoint.
std::vector<double> graded_axis(const AxisSpec& spec);

} // namespace resokit::field
