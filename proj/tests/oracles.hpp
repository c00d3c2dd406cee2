#pragma once

// Brute-force reference computations shared by the unit tests and the
// acceptance runner. Nothing here calls into the library under test.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace oracle {

inline constexpr double eps0 = 8.8541878128e-12;

// Uniform square grid, potential stored row-major (j * nx + i).
struct Grid {
    std::size_t nx = 0, ny = 0;
    double h = 0.0;
    double x0 = 0.0, y0 = 0.0;
    std::vector<double> phi;
    std::vector<char> fixed;

    double x(std::size_t i) const { return x0 + static_cast<double>(i) * h; }
    double y(std::size_t j) const { return y0 + static_cast<double>(j) * h; }
    double& at(std::size_t i, std::size_t j) { return phi[j * nx + i]; }
    double at(std::size_t i, std::size_t j) const { return phi[j * nx + i]; }
};

// Two thin rings at z = 0 (r in [9, 11] µm at +1 V, [19, 21] µm at −1 V),
// 1 µm grid on r ∈ [0, 60], z ∈ [−30, 30], axis mirror, outer walls at 0 V.
inline Grid two_ring_grid() {
    Grid g;
    g.h = 1e-6;
    g.nx = 61;
    g.ny = 61;
    g.x0 = 0.0;
    g.y0 = -30e-6;
    g.phi.assign(g.nx * g.ny, 0.0);
    g.fixed.assign(g.nx * g.ny, 0);
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) {
            const std::size_t n = j * g.nx + i;
            if (i == g.nx - 1 || j == 0 || j == g.ny - 1)
                g.fixed[n] = 1;
        }
    const std::size_t jz = 30;
    for (std::size_t i = 9; i <= 11; ++i) {
        g.at(i, jz) = 1.0;
        g.fixed[jz * g.nx + i] = 1;
    }
    for (std::size_t i = 19; i <= 21; ++i) {
        g.at(i, jz) = -1.0;
        g.fixed[jz * g.nx + i] = 1;
    }
    return g;
}

// Gauss–Seidel on the cylindrical five-point stencil
//   (r+ (φE − φ) + r− (φW − φ)) + r (φN + φS − 2φ) = 0,
// with the axis row from L'Hôpital: 4(φ1 − φ0) + (φN + φS − 2φ0) = 0.
// Sweeps until the largest update is below `tol`.
inline int gauss_seidel_axisymmetric(Grid& g, double tol = 1e-14, int max_sweeps = 200000) {
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        double worst = 0.0;
        for (std::size_t j = 1; j + 1 < g.ny; ++j)
            for (std::size_t i = 0; i + 1 < g.nx; ++i) {
                if (g.fixed[j * g.nx + i])
                    continue;
                const double vert = g.at(i, j + 1) + g.at(i, j - 1);
                double next;
                if (i == 0) {
                    next = (4.0 * g.at(1, j) + vert) / 6.0;
                } else {
                    const double r = g.x(i);
                    const double rp = r + 0.5 * g.h, rm = r - 0.5 * g.h;
                    next = (rp * g.at(i + 1, j) + rm * g.at(i - 1, j) + r * vert) / (4.0 * r);
                }
                worst = std::max(worst, std::abs(next - g.at(i, j)));
                g.at(i, j) = next;
            }
        if (worst < tol)
            return sweep;
    }
    return -1;
}

// Stored energy of an axisymmetric FD solution (ε = ε0), J per revolution:
// each edge difference weighted by the dual-cell face area times 2π r.
inline double axisymmetric_energy(const Grid& g) {
    double sum = 0.0;
    const double h = g.h;
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i + 1 < g.nx; ++i) {
            const double d = g.at(i + 1, j) - g.at(i, j);
            // radial edge: face height h (half at the top/bottom rows), radius r_{i+1/2}
            const double face = (j == 0 || j + 1 == g.ny) ? 0.5 * h : h;
            sum += (g.x(i) + 0.5 * h) * face / h * d * d;
        }
    for (std::size_t j = 0; j + 1 < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double d = g.at(i, j + 1) - g.at(i, j);
            // vertical edge: ∫ r dr over the dual cell
            double area;
            const double r = g.x(i);
            if (i == 0)
                area = h * h / 8.0;
            else if (i + 1 == g.nx)
                area = 0.5 * ((r * r) - (r - 0.5 * h) * (r - 0.5 * h));
            else
                area = r * h;
            sum += area / h * d * d;
        }
    return 0.5 * eps0 * 2.0 * std::numbers::pi * sum;
}

// Planar Laplace problem on a uniform grid, solved by successive
// over-relaxation. Left column is a mirror plane (Neumann), other walls are
// fixed by `fixed`.
inline int sor_planar(Grid& g, double tol = 1e-13, int max_sweeps = 500000) {
    const double n = static_cast<double>(std::max(g.nx, g.ny));
    const double omega = 2.0 / (1.0 + std::sin(std::numbers::pi / n));
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        double worst = 0.0;
        for (std::size_t j = 1; j + 1 < g.ny; ++j)
            for (std::size_t i = 0; i + 1 < g.nx; ++i) {
                if (g.fixed[j * g.nx + i])
                    continue;
                const double west = i == 0 ? g.at(1, j) : g.at(i - 1, j);
                const double gs = 0.25 * (g.at(i + 1, j) + west + g.at(i, j + 1) + g.at(i, j - 1));
                const double delta = omega * (gs - g.at(i, j));
                worst = std::max(worst, std::abs(delta));
                g.at(i, j) += delta;
            }
        if (worst < tol)
            return sweep;
    }
    return -1;
}

// Energy per unit length of the half domain (ε = ε0), edge form; edges on
// the mirror column carry half weight.
inline double planar_energy(const Grid& g) {
    double sum = 0.0;
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i + 1 < g.nx; ++i) {
            const double d = g.at(i + 1, j) - g.at(i, j);
            sum += ((j == 0 || j + 1 == g.ny) ? 0.5 : 1.0) * d * d;
        }
    for (std::size_t j = 0; j + 1 < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double d = g.at(i, j + 1) - g.at(i, j);
            sum += ((i == 0 || i + 1 == g.nx) ? 0.5 : 1.0) * d * d;
        }
    return 0.5 * eps0 * sum;
}

// Reference device data (label, p·δ_TLS ×1e-8, Qi,0 ×1e5, Qi,high ×1e6,
// p_MA, p_MS, p_SA, p_tot ×1e-5).
struct DeviceRow {
    const char* label;
    double p_delta_tls;
    double qi0;
    double qi_high;
    double p_ma, p_ms, p_sa, p_tot;
};

inline const std::vector<DeviceRow>& device_rows() {
    static const std::vector<DeviceRow> rows = {
        {"CPW1", 58.0, 17.3, 45.50, 5.60, 56.50, 54.81, 116.91},
        {"CPW2", 38.8, 25.8, 38.59, 9.41, 88.42, 87.90, 185.73},
        {"CPW3", 123.0, 8.13, 23.46, 14.50, 128.03, 129.52, 272.05},
        {"ASR1", 15.8, 63.0, 84.5, 2.66, 30.84, 25.19, 58.69},
        {"ASR2", 22.1, 45.0, 88.0, 3.06, 34.31, 28.82, 66.19},
        {"ASR3", 10.4, 96.0, 99.1, 3.67, 39.68, 34.40, 77.75},
        {"ASR4", 11.9, 84.0, 81.8, 4.12, 43.59, 38.44, 86.15},
    };
    return rows;
}

} // namespace oracle
