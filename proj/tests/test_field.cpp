#include "oracles.hpp"

#include "resokit/design.hpp"
#include "resokit/error.hpp"
#include "resokit/field/mesh.hpp"
#include "resokit/field/participation.hpp"
#include "resokit/field/solver.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

using namespace resokit;
using namespace resokit::field;

namespace {

constexpr double eps0 = 8.8541878128e-12;

std::vector<double> uniform_axis(double lo, double step, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i)
        v.push_back(lo + i * step);
    return v;
}

CpwGeometry designed_cpw(double w) {
    auto g = CpwGeometry::from_gap(w, cpw_gap_for_impedance(w), 1.0);
    g.length = cpw_length_for_frequency(g, 5e9);
    return g;
}

// Small three-turn spiral: cheap enough for repeated axisymmetric solves.
AsrGeometry small_spiral() {
    AsrGeometry g;
    g.w = 4e-6;
    g.pitch = 8e-6;
    g.turns = 3;
    return g;
}

ReportOptions quick() {
    ReportOptions o;
    o.check_convergence = false;
    return o;
}

} // namespace

TEST_CASE("layered parallel plate is exact") {
    // Plates 20 µm apart: 8 µm of ε = 11.45 under 12 µm of ε = 1.
    const double W = 10e-6;
    auto p = GridProblem::uniform(Symmetry::Planar, uniform_axis(0, 1e-6, 11),
                                  uniform_axis(0, 1e-6, 21), 1.0);
    for (std::size_t j = 0; j < 8; ++j)
        for (std::size_t i = 0; i < 10; ++i)
            p.cell_eps[p.cell_index(i, j)] = 11.45;
    p.left = p.right = Boundary::Neumann;
    p.conductors.push_back({0.0, W, 20e-6, 20e-6, 1.0});
    const auto sol = solve(p);
    const double c = eps0 * W / (8e-6 / 11.45 + 12e-6 / 1.0);
    CHECK(sol.total_energy == doctest::Approx(0.5 * c).epsilon(1e-10));
    // potential is piecewise linear in y
    const double v_interface = (8e-6 / 11.45) / (8e-6 / 11.45 + 12e-6);
    CHECK(sol.node_potential(3, 8) == doctest::Approx(v_interface).epsilon(1e-10));
}

TEST_CASE("grounded structure stores no energy") {
    auto domain = SolverDomain::for_cpw(designed_cpw(12e-6));
    const auto sol = solve_cpw_cross_section(domain, 0.0);
    CHECK(sol.total_energy == 0.0);
    for (double v : sol.potential)
        CHECK(v == 0.0);
    const auto r = participation_from_solution(sol, domain.layer);
    CHECK(r.p_ma == 0.0);
    CHECK(r.p_ms == 0.0);
    CHECK(r.p_sa == 0.0);
    CHECK(r.edge_ma == 0.0);
}

TEST_CASE("assembly consistency and residual") {
    auto domain = SolverDomain::for_cpw(designed_cpw(20e-6));
    const auto sol = solve_cpw_cross_section(domain);
    CHECK(sol.total_energy > 0.0);
    CHECK(sol.diagnostics.relative_residual < 1e-10);
    const double q = sol.quadratic_form_energy();
    CHECK(std::abs(q - sol.integrated_energy()) / q < 1e-8);

    // Volume integral of (ε/2)|E|² with cell-averaged fields converges to the
    // same energy; on this graded mesh it agrees to a few percent.
    double volume = 0.0;
    const auto& m = sol.mesh;
    for (std::size_t j = 0; j + 1 < m.ny(); ++j)
        for (std::size_t i = 0; i + 1 < m.nx(); ++i) {
            const double ex = sol.cell_ex(i, j), ey = sol.cell_ey(i, j);
            volume += 0.5 * eps0 * m.cell_eps[m.cell_index(i, j)] * (ex * ex + ey * ey) *
                      sol.cell_measure(i, j);
        }
    CHECK(std::abs(volume - q) / q < 0.05);
}

TEST_CASE("two-ring axisymmetric problem matches Gauss-Seidel relaxation") {
    auto ref = oracle::two_ring_grid();
    REQUIRE(oracle::gauss_seidel_axisymmetric(ref) > 0);
    const double ref_energy = oracle::axisymmetric_energy(ref);

    auto p = GridProblem::uniform(Symmetry::Axisymmetric, uniform_axis(0, 1e-6, 61),
                                  uniform_axis(-30e-6, 1e-6, 61), 1.0);
    p.conductors.push_back({9e-6, 11e-6, 0.0, 0.0, 1.0});
    p.conductors.push_back({19e-6, 21e-6, 0.0, 0.0, -1.0});
    const auto sol = solve(p);

    double worst = 0.0;
    for (std::size_t j = 0; j < 61; ++j)
        for (std::size_t i = 0; i < 61; ++i)
            worst = std::max(worst, std::abs(sol.node_potential(i, j) - ref.at(i, j)));
    CHECK(worst < 1e-6);
    CHECK(std::abs(sol.total_energy - ref_energy) / ref_energy < 0.02);
}

TEST_CASE("strip over ground matches a fine uniform relaxation") {
    // Half domain: strip x ∈ [0, 5] µm, y ∈ [4, 5] µm at 1 V over a grounded
    // plane at y = 0, grounded walls at x = 40 µm and y = 30 µm.
    oracle::Grid g;
    g.h = 0.25e-6;
    g.nx = 161;
    g.ny = 121;
    g.phi.assign(g.nx * g.ny, 0.0);
    g.fixed.assign(g.nx * g.ny, 0);
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) {
            const std::size_t n = j * g.nx + i;
            if (i + 1 == g.nx || j == 0 || j + 1 == g.ny)
                g.fixed[n] = 1;
            if (i <= 20 && j >= 16 && j <= 20) {
                g.fixed[n] = 1;
                g.phi[n] = 1.0;
            }
        }
    REQUIRE(oracle::sor_planar(g) > 0);
    const double ref = oracle::planar_energy(g);

    AxisSpec ax{0.0, 40e-6, {5e-6}, {5e-6}, {}, 1e-6, 0.02e-6, 1.2};
    AxisSpec ay{0.0, 30e-6, {4e-6, 5e-6}, {4e-6, 5e-6}, {}, 1e-6, 0.02e-6, 1.2};
    auto p = GridProblem::uniform(Symmetry::Planar, graded_axis(ax), graded_axis(ay), 1.0);
    p.conductors.push_back({0.0, 5e-6, 4e-6, 5e-6, 1.0});
    p.mark_conductors();
    const auto sol = solve(p);
    CHECK(std::abs(sol.total_energy - ref) / ref < 0.02);
    // C = 2U/V² exceeds the bare parallel-plate value because of fringing.
    CHECK(2 * sol.total_energy > eps0 * 5e-6 / 4e-6);
}

TEST_CASE("energies scale quadratically, ratios do not") {
    auto domain = SolverDomain::for_cpw(designed_cpw(12e-6));
    const auto one = solve_cpw_cross_section(domain, 1.0);
    const auto three = solve_cpw_cross_section(domain, -3.0);
    CHECK(three.total_energy == doctest::Approx(9 * one.total_energy).epsilon(1e-10));
    const auto a = participation_from_solution(one, domain.layer);
    const auto b = participation_from_solution(three, domain.layer);
    CHECK(b.p_ma == doctest::Approx(a.p_ma).epsilon(1e-10));
    CHECK(b.p_ms == doctest::Approx(a.p_ms).epsilon(1e-10));
    CHECK(b.p_sa == doctest::Approx(a.p_sa).epsilon(1e-10));
}

TEST_CASE("tangential surface field: SA integral has no rescaling") {
    // Uniform field E0 along x between two electrodes; the SA surface at
    // y = 2 µm carries only tangential field.
    const double L = 10e-6, V0 = 2.0;
    auto p = GridProblem::uniform(Symmetry::Planar, uniform_axis(0, 0.5e-6, 21),
                                  uniform_axis(0, 0.5e-6, 9), 1.0);
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t i = 0; i < 20; ++i)
            p.cell_eps[p.cell_index(i, j)] = 11.45;
    p.left = Boundary::Neumann;
    p.right = Boundary::Dirichlet;
    p.top = p.bottom = Boundary::Neumann;
    p.conductors.push_back({0.0, 0.0, 0.0, 4e-6, V0});
    p.interfaces.substrate_surface = 2e-6;
    p.interfaces.metal_top = 2e-6;
    const auto sol = solve(p);
    LossyLayerSpec layer;
    const double e0 = V0 / L;
    const double expected = layer.thickness * 0.5 * layer.eps * eps0 * e0 * e0 * L / sol.total_energy;
    CHECK(participation_internal(sol, layer, Interface::SA) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(participation_internal(sol, layer, Interface::MS) == 0.0);
}

TEST_CASE("CPW participation ratios: structure of the result") {
    for (double w : {20e-6, 12e-6, 8e-6}) {
        CAPTURE(w);
        const auto r = participation_report(designed_cpw(w), {}, quick());
        for (double p : {r.p_ma, r.p_ms, r.p_sa}) {
            CHECK(p > 0.0);
            CHECK(p < 1.0);
        }
        CHECK(r.p_tot == doctest::Approx(r.p_ma + r.p_ms + r.p_sa).epsilon(1e-14));
        CHECK(r.p_ma < r.p_ms);
        CHECK(r.p_ma < r.p_sa);
        CHECK(std::abs(r.p_ms - r.p_sa) / r.p_ms < 0.15);
        CHECK(r.edge_ma > 0.0);
        CHECK(r.edge_ms > 0.0);
        CHECK(r.edge_sa > 0.0);
        CHECK(r.diagnostics.relative_residual < 1e-10);
    }
}

TEST_CASE("narrower CPWs concentrate more energy at the surfaces") {
    const double wide = participation_report(designed_cpw(20e-6), {}, quick()).p_tot;
    const double mid = participation_report(designed_cpw(12e-6), {}, quick()).p_tot;
    const double narrow = participation_report(designed_cpw(8e-6), {}, quick()).p_tot;
    CHECK(wide < mid);
    CHECK(mid < narrow);
}

TEST_CASE("thin-layer limit is linear in thickness") {
    LossyLayerSpec thick, thin;
    thin.thickness = 1.5e-9;
    const auto g = designed_cpw(12e-6);
    const auto a = participation_report(g, thick, quick());
    const auto b = participation_report(g, thin, quick());
    CHECK(std::abs(b.p_tot / a.p_tot - 0.5) < 0.05);
    CHECK(std::abs(b.p_ms / a.p_ms - 0.5) < 0.05);
}

TEST_CASE("substrate depth barely matters") {
    auto d = SolverDomain::for_cpw(designed_cpw(12e-6));
    const auto shallow = participation_report(d, quick());
    d.substrate_thickness = 600e-6;
    const auto deep = participation_report(d, quick());
    for (auto [a, b] : {std::pair{shallow.p_ma, deep.p_ma}, std::pair{shallow.p_ms, deep.p_ms},
                        std::pair{shallow.p_sa, deep.p_sa}})
        CHECK(std::abs(a - b) / a < 0.05);
}

TEST_CASE("mesh refinement") {
    auto d = SolverDomain::for_cpw(designed_cpw(20e-6));
    const auto coarse = solve_cpw_cross_section(d);
    d.mesh.refinement = 1;
    const auto fine = solve_cpw_cross_section(d);
    CHECK(fine.diagnostics.cells > coarse.diagnostics.cells);
    CHECK(std::abs(fine.total_energy - coarse.total_energy) / coarse.total_energy < 0.01);

    const auto r = participation_report(designed_cpw(20e-6));
    CHECK(r.diagnostics.converged);
    CHECK(r.diagnostics.max_relative_change < 0.05);
    CHECK(r.diagnostics.edge_change < 0.10);
}

TEST_CASE("concentric rings") {
    const auto g = small_spiral();
    SUBCASE("ring potentials follow the cosine profile") {
        AsrGeometry asr1;
        asr1.w = 12e-6;
        asr1.pitch = 24e-6;
        asr1.turns = 12;
        const auto v = ring_potentials(asr1);
        REQUIRE(v.size() == 12);
        const double node = asr1.r_out() / std::sqrt(2.0);
        for (int k = 0; k < 12; ++k) {
            const double center = k * 24e-6 + 6e-6;
            CHECK((v[k] > 0) == (center < node));
        }
        CHECK(v.front() > 0.99);
    }
    SUBCASE("rings at one potential still store energy") {
        const auto d = SolverDomain::for_asr(g);
        const auto sol = solve_asr_axisymmetric(d, std::vector<double>(3, 1.0));
        CHECK(sol.total_energy > 0.0);
        CHECK(sol.diagnostics.relative_residual < 1e-10);
        const double q = sol.quadratic_form_energy();
        CHECK(std::abs(q - sol.integrated_energy()) / q < 1e-8);
    }
    SUBCASE("ratios are ordered like the planar case") {
        const auto r = participation_report(g, {}, quick());
        CHECK(r.p_ma > 0.0);
        CHECK(r.p_ma < r.p_ms);
        CHECK(r.p_ma < r.p_sa);
        CHECK(r.p_tot == doctest::Approx(r.p_ma + r.p_ms + r.p_sa).epsilon(1e-14));
    }
    SUBCASE("wrong number of ring potentials") {
        CHECK_THROWS_AS(solve_asr_axisymmetric(SolverDomain::for_asr(g), {1.0}), DomainError);
    }
}

TEST_CASE("domain validation") {
    auto d = SolverDomain::for_cpw(designed_cpw(12e-6));
    d.domain_half_width *= 0.5;
    CHECK_THROWS_AS(d.validate(), DomainError);
    d = SolverDomain::for_asr(small_spiral());
    d.domain_height = 5 * small_spiral().r_out();
    CHECK_THROWS_AS(solve_asr_axisymmetric(d, {1, 1, 1}), DomainError);
    d = SolverDomain::for_cpw(designed_cpw(12e-6));
    d.layer.thickness = 0.0;
    CHECK_THROWS_AS(d.validate(), DomainError);
    CHECK_THROWS_AS(build_asr_problem(SolverDomain::for_cpw(designed_cpw(12e-6)), {}), DomainError);

    auto bad = GridProblem::uniform(Symmetry::Planar, {0.0, 1.0, 1.0}, {0.0, 1.0}, 1.0);
    CHECK_THROWS_AS(solve(bad), SolverError);
    auto neg = GridProblem::uniform(Symmetry::Axisymmetric, {-1.0, 1.0}, {0.0, 1.0}, 1.0);
    CHECK_THROWS_AS(solve(neg), SolverError);
}

TEST_CASE("mesh dump") {
    auto p = GridProblem::uniform(Symmetry::Planar, uniform_axis(0, 1e-6, 4),
                                  uniform_axis(0, 1e-6, 3), 1.0);
    p.conductors.push_back({0.0, 0.0, 0.0, 2e-6, 1.0});
    const auto sol = solve(p);
    std::ostringstream out;
    write_mesh(out, sol);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "# nodes 12");
    int nodes = 0, elements = 0;
    bool in_elements = false;
    while (std::getline(in, line)) {
        if (line.rfind("# elements", 0) == 0) {
            CHECK(line == "# elements 6");
            in_elements = true;
            continue;
        }
        if (line.empty() || line[0] == '#')
            continue;
        (in_elements ? elements : nodes)++;
    }
    CHECK(nodes == 12);
    CHECK(elements == 6);
}

TEST_CASE("graded axes") {
    AxisSpec s{0.0, 1.0, {0.25, 0.5}, {0.5}, {}, 0.1, 1e-3, 1.3};
    const auto xs = graded_axis(s);
    CHECK(xs.front() == 0.0);
    CHECK(xs.back() == 1.0);
    for (double b : {0.25, 0.5})
        CHECK(std::find(xs.begin(), xs.end(), b) != xs.end());
    for (std::size_t i = 1; i < xs.size(); ++i) {
        CHECK(xs[i] > xs[i - 1]);
        // segments are stretched to fit, never by more than one growth step
        CHECK(xs[i] - xs[i - 1] <= 0.1 * 1.3);
    }
    AxisSpec empty;
    empty.lo = 1.0;
    CHECK_THROWS_AS(graded_axis(empty), SolverError);
}
