#include "resokit/field/mesh.hpp"

#include "resokit/constants.hpp"
#include "resokit/error.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#ifdef RESOKIT_HAVE_CHOLMOD
#include <Eigen/CholmodSupport>
#endif

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>

namespace resokit::field {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// One edge of a cell: node indices and the coupling coefficient (relative
// permittivity folded in, ε0 excluded).
struct EdgeCoupling {
    std::size_t a;
    std::size_t b;
    double c;
};

std::array<EdgeCoupling, 4> cell_couplings(const GridProblem& p, std::size_t i, std::size_t j) {
    const double x0 = p.xs[i], x1 = p.xs[i + 1];
    const double y0 = p.ys[j], y1 = p.ys[j + 1];
    const double dx = x1 - x0, dy = y1 - y0;
    const double eps = p.cell_eps[p.cell_index(i, j)];
    const std::size_t n00 = p.node_index(i, j), n10 = p.node_index(i + 1, j);
    const std::size_t n01 = p.node_index(i, j + 1), n11 = p.node_index(i + 1, j + 1);

    double ch, cvl, cvr;
    if (p.symmetry == Symmetry::Planar) {
        ch = eps * dy / (2.0 * dx);
        cvl = cvr = eps * dx / (2.0 * dy);
    } else {
        const double two_pi = 2.0 * constants::pi;
        const double rm = 0.5 * (x0 + x1);
        ch = two_pi * eps * 0.5 * dy * rm / dx;
        cvl = two_pi * eps * 0.5 * (rm * rm - x0 * x0) / dy;
        cvr = two_pi * eps * 0.5 * (x1 * x1 - rm * rm) / dy;
    }
    return {EdgeCoupling{n00, n10, ch}, EdgeCoupling{n01, n11, ch}, EdgeCoupling{n00, n01, cvl},
            EdgeCoupling{n10, n11, cvr}};
}

bool inside_closed(const Conductor& c, double x, double y) {
    const double tol_x = 1e-12 * std::max(std::abs(c.x0), std::abs(c.x1)) + 1e-18;
    const double tol_y = 1e-12 * std::max(std::abs(c.y0), std::abs(c.y1)) + 1e-18;
    return x >= c.x0 - tol_x && x <= c.x1 + tol_x && y >= c.y0 - tol_y && y <= c.y1 + tol_y;
}

SpMat assemble_full(const GridProblem& p) {
    const std::size_t nn = p.nx() * p.ny();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve((p.nx() - 1) * (p.ny() - 1) * 16);
    for (std::size_t j = 0; j + 1 < p.ny(); ++j)
        for (std::size_t i = 0; i + 1 < p.nx(); ++i)
            for (const auto& e : cell_couplings(p, i, j)) {
                trips.emplace_back(e.a, e.a, e.c);
                trips.emplace_back(e.b, e.b, e.c);
                trips.emplace_back(e.a, e.b, -e.c);
                trips.emplace_back(e.b, e.a, -e.c);
            }
    SpMat a(static_cast<Eigen::Index>(nn), static_cast<Eigen::Index>(nn));
    a.setFromTriplets(trips.begin(), trips.end());
    return a;
}

template <class Factorization>
bool factor_and_solve(const SpMat& a, const Vec& b, Vec& x, int& steps, double& relres) {
    Factorization solver;
    solver.compute(a);
    if (solver.info() != Eigen::Success)
        return false;
    x = solver.solve(b);
    if (solver.info() != Eigen::Success)
        return false;
    const double bnorm = b.norm();
    relres = (a * x - b).norm() / bnorm;
    steps = 0;
    while (relres > 1e-13 && steps < 4) {
        Vec r = b - a * x;
        x += solver.solve(r);
        relres = (a * x - b).norm() / bnorm;
        ++steps;
    }
    return std::isfinite(relres);
}

} // namespace

GridProblem GridProblem::uniform(Symmetry symmetry, std::vector<double> xs, std::vector<double> ys,
                                 double eps) {
    GridProblem p;
    p.symmetry = symmetry;
    p.xs = std::move(xs);
    p.ys = std::move(ys);
    const std::size_t cells = (p.nx() - 1) * (p.ny() - 1);
    p.cell_eps.assign(cells, eps);
    p.cell_kind.assign(cells, CellKind::Air);
    return p;
}

void GridProblem::mark_conductors() {
    for (std::size_t j = 0; j + 1 < ny(); ++j) {
        const double yc = 0.5 * (ys[j] + ys[j + 1]);
        for (std::size_t i = 0; i + 1 < nx(); ++i) {
            const double xc = 0.5 * (xs[i] + xs[i + 1]);
            for (const auto& c : conductors)
                if (xc > c.x0 && xc < c.x1 && yc > c.y0 && yc < c.y1)
                    cell_kind[cell_index(i, j)] = CellKind::Metal;
        }
    }
}

void GridProblem::validate() const {
    if (nx() < 2 || ny() < 2)
        throw SolverError("grid needs at least two lines per axis");
    auto increasing = [](const std::vector<double>& v) {
        return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
    };
    if (!increasing(xs) || !increasing(ys))
        throw SolverError("grid lines must be strictly increasing");
    const std::size_t cells = (nx() - 1) * (ny() - 1);
    if (cell_eps.size() != cells || cell_kind.size() != cells)
        throw SolverError("cell arrays do not match the grid");
    if (std::any_of(cell_eps.begin(), cell_eps.end(), [](double e) { return !(e > 0.0); }))
        throw SolverError("cell permittivities must be positive");
    if (symmetry == Symmetry::Axisymmetric && xs.front() < 0.0)
        throw SolverError("axisymmetric grids must have r >= 0");
}

double FieldSolution::cell_energy(std::size_t i, std::size_t j) const {
    double sum = 0.0;
    for (const auto& e : cell_couplings(mesh, i, j)) {
        const double d = potential[e.a] - potential[e.b];
        sum += e.c * d * d;
    }
    return 0.5 * constants::eps0 * mesh.mirror_factor * sum;
}

double FieldSolution::cell_ex(std::size_t i, std::size_t j) const {
    const double dx = mesh.xs[i + 1] - mesh.xs[i];
    return -0.5 * ((node_potential(i + 1, j) - node_potential(i, j)) +
                   (node_potential(i + 1, j + 1) - node_potential(i, j + 1))) / dx;
}

double FieldSolution::cell_ey(std::size_t i, std::size_t j) const {
    const double dy = mesh.ys[j + 1] - mesh.ys[j];
    return -0.5 * ((node_potential(i, j + 1) - node_potential(i, j)) +
                   (node_potential(i + 1, j + 1) - node_potential(i + 1, j))) / dy;
}

double FieldSolution::cell_measure(std::size_t i, std::size_t j) const {
    const double x0 = mesh.xs[i], x1 = mesh.xs[i + 1];
    const double dy = mesh.ys[j + 1] - mesh.ys[j];
    if (mesh.symmetry == Symmetry::Planar)
        return mesh.mirror_factor * (x1 - x0) * dy;
    return constants::pi * (x1 * x1 - x0 * x0) * dy;
}

double FieldSolution::integrated_energy() const {
    double sum = 0.0;
    for (std::size_t j = 0; j + 1 < mesh.ny(); ++j)
        for (std::size_t i = 0; i + 1 < mesh.nx(); ++i)
            sum += cell_energy(i, j);
    return sum;
}

double FieldSolution::quadratic_form_energy() const {
    const SpMat a = assemble_full(mesh);
    const Eigen::Map<const Vec> phi(potential.data(), static_cast<Eigen::Index>(potential.size()));
    return 0.5 * constants::eps0 * mesh.mirror_factor * phi.dot(a * phi);
}

FieldSolution solve(GridProblem problem) {
    problem.validate();
    const std::size_t nx = problem.nx(), ny = problem.ny();
    const std::size_t nn = nx * ny;

    FieldSolution sol;
    sol.potential.assign(nn, 0.0);
    sol.fixed.assign(nn, 0);

    auto on_dirichlet_side = [&](std::size_t i, std::size_t j) {
        return (i == 0 && problem.left == Boundary::Dirichlet) ||
               (i + 1 == nx && problem.right == Boundary::Dirichlet) ||
               (j == 0 && problem.bottom == Boundary::Dirichlet) ||
               (j + 1 == ny && problem.top == Boundary::Dirichlet);
    };
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t n = problem.node_index(i, j);
            bool set = false;
            for (const auto& c : problem.conductors)
                if (inside_closed(c, problem.xs[i], problem.ys[j])) {
                    sol.potential[n] = c.potential;
                    set = true;
                    break;
                }
            if (!set && on_dirichlet_side(i, j)) {
                sol.potential[n] = problem.boundary_potential;
                set = true;
            }
            sol.fixed[n] = set ? 1 : 0;
        }

    std::vector<Eigen::Index> unknown(nn, -1);
    Eigen::Index nu = 0;
    for (std::size_t n = 0; n < nn; ++n)
        if (!sol.fixed[n])
            unknown[n] = nu++;
    if (nu == 0)
        throw SolverError("no free nodes in the problem");

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve((nx - 1) * (ny - 1) * 16);
    Vec rhs = Vec::Zero(nu);
    for (std::size_t j = 0; j + 1 < ny; ++j)
        for (std::size_t i = 0; i + 1 < nx; ++i)
            for (const auto& e : cell_couplings(problem, i, j)) {
                const Eigen::Index ua = unknown[e.a], ub = unknown[e.b];
                if (ua >= 0)
                    trips.emplace_back(ua, ua, e.c);
                if (ub >= 0)
                    trips.emplace_back(ub, ub, e.c);
                if (ua >= 0 && ub >= 0) {
                    trips.emplace_back(ua, ub, -e.c);
                    trips.emplace_back(ub, ua, -e.c);
                } else if (ua >= 0) {
                    rhs[ua] += e.c * sol.potential[e.b];
                } else if (ub >= 0) {
                    rhs[ub] += e.c * sol.potential[e.a];
                }
            }
    SpMat a(nu, nu);
    a.setFromTriplets(trips.begin(), trips.end());
    trips.clear();
    trips.shrink_to_fit();

    sol.diagnostics.unknowns = static_cast<std::size_t>(nu);
    sol.diagnostics.cells = (nx - 1) * (ny - 1);

    Vec x = Vec::Zero(nu);
    if (rhs.norm() > 0.0) {
        bool ok = false;
#ifdef RESOKIT_HAVE_CHOLMOD
        sol.diagnostics.backend = "cholmod-supernodal";
        ok = factor_and_solve<Eigen::CholmodSupernodalLLT<SpMat, Eigen::Lower>>(
            a, rhs, x, sol.diagnostics.refinement_steps, sol.diagnostics.relative_residual);
#else
        sol.diagnostics.backend = "eigen-simplicial-ldlt";
        ok = factor_and_solve<Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>>>(
            a, rhs, x, sol.diagnostics.refinement_steps, sol.diagnostics.relative_residual);
#endif
        if (!ok)
            throw SolverError("sparse factorization failed");
        if (!(sol.diagnostics.relative_residual < 1e-10))
            throw SolverError("linear solve residual " +
                              std::to_string(sol.diagnostics.relative_residual) +
                              " above 1e-10");
    }
    for (std::size_t n = 0; n < nn; ++n)
        if (unknown[n] >= 0)
            sol.potential[n] = x[unknown[n]];

    sol.mesh = std::move(problem);
    sol.total_energy = sol.integrated_energy();
    return sol;
}

void write_mesh(std::ostream& out, const FieldSolution& solution) {
    const auto& m = solution.mesh;
    out << "# nodes " << m.nx() * m.ny() << "\n# index x y potential fixed\n";
    out.precision(12);
    for (std::size_t j = 0; j < m.ny(); ++j)
        for (std::size_t i = 0; i < m.nx(); ++i) {
            const std::size_t n = m.node_index(i, j);
            out << n << ' ' << m.xs[i] << ' ' << m.ys[j] << ' ' << solution.potential[n] << ' '
                << int(solution.fixed[n]) << '\n';
        }
    out << "# elements " << (m.nx() - 1) * (m.ny() - 1)
        << "\n# index n0 n1 n2 n3 eps kind\n";
    for (std::size_t j = 0; j + 1 < m.ny(); ++j)
        for (std::size_t i = 0; i + 1 < m.nx(); ++i) {
            const std::size_t c = m.cell_index(i, j);
            out << c << ' ' << m.node_index(i, j) << ' ' << m.node_index(i + 1, j) << ' '
                << m.node_index(i + 1, j + 1) << ' ' << m.node_index(i, j + 1) << ' '
                << m.cell_eps[c] << ' ' << int(m.cell_kind[c]) << '\n';
        }
}

std::vector<double> graded_axis(const AxisSpec& spec) {
    if (!(spec.hi > spec.lo))
        throw SolverError("graded_axis: empty range");
    if (!(spec.growth > 1.0) || !(spec.h_min > 0.0))
        throw SolverError("graded_axis: need growth > 1 and h_min > 0");
    const double span = spec.hi - spec.lo;
    const double far_cap = spec.far_cap > 0.0 ? spec.far_cap : span;

    auto cap_at = [&](double x) {
        double c = far_cap;
        for (const auto& [zone, cap] : spec.cap_zones)
            if (x >= zone.lo && x <= zone.hi)
                c = std::min(c, cap);
        return c;
    };
    auto size_at = [&](double x) {
        double h = cap_at(x);
        for (double f : spec.fine_points)
            h = std::min(h, spec.h_min + (spec.growth - 1.0) * std::abs(x - f));
        return h;
    };

    std::vector<double> breaks{spec.lo, spec.hi};
    for (double b : spec.breakpoints)
        if (b > spec.lo && b < spec.hi)
            breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    const double merge_tol = 1e-12 * span;
    breaks.erase(std::unique(breaks.begin(), breaks.end(),
                             [&](double a, double b) { return std::abs(a - b) <= merge_tol; }),
                 breaks.end());
    breaks.back() = spec.hi;

    std::vector<double> nodes{breaks.front()};
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double a = breaks[k], b = breaks[k + 1];
        const double length = b - a;
        const double cap = cap_at(0.5 * (a + b));
        double next_left = std::min(size_at(a), cap);
        double next_right = std::min(size_at(b), cap);
        std::vector<double> left, right;
        double total = 0.0;
        while (total + std::min(next_left, next_right) <= length) {
            if (next_left <= next_right) {
                left.push_back(next_left);
                total += next_left;
                next_left = std::min(next_left * spec.growth, cap);
            } else {
                right.push_back(next_right);
                total += next_right;
                next_right = std::min(next_right * spec.growth, cap);
            }
        }
        const double extra = std::min(next_left, next_right);
        double scale;
        if (left.empty() && right.empty()) {
            left.push_back(length);
            scale = 1.0;
        } else if (std::log(length / total) < -std::log(length / (total + extra))) {
            scale = length / total;
        } else {
            (next_left <= next_right ? left : right).push_back(extra);
            scale = length / (total + extra);
        }
        double x = a;
        for (double s : left) {
            x += s * scale;
            nodes.push_back(x);
        }
        for (auto it = right.rbegin(); it != right.rend(); ++it) {
            x += *it * scale;
            nodes.push_back(x);
        }
        nodes.back() = b;
    }
    return nodes;
}

} // namespace resokit::field
