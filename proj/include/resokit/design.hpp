#pragma once

// Closed-form frequency, impedance and inductance of quarter-wave coplanar
// waveguide (CPW) and Archimedean spiral (ASR) resonators.

namespace resokit {

/// Complete elliptic integral of the first kind K(k), modulus convention
/// (K(k) = ∫ dθ / sqrt(1 - k² sin² θ)). Computed with the arithmetic-geometric
/// mean. Throws DomainError unless 0 <= k < 1.
double elliptic_k(double k);

/// Quarter-wave CPW cross-section and length, all lengths in metres.
///
/// `g` is the center-conductor width plus both gaps, so k1 = w/g. Use
/// `from_gap` when starting from the physical gap width.
struct CpwGeometry {
    double w = 0.0;
    double g = 0.0;
    double h = 1.5e-3;  // distance to the upper shield (sample-box height)
    double length = 0.0;
    double eps_sub = 11.45;

    static CpwGeometry from_gap(double w, double gap, double length, double eps_sub = 11.45,
                                double h = 1.5e-3);

    double gap() const { return 0.5 * (g - w); }
    double k1() const { return w / g; }
    double k2() const;

    void validate() const;
};

/// Archimedean spiral: `pitch` is wire width plus spacing, r_out = r_in + n·pitch.
struct AsrGeometry {
    double w = 0.0;
    double pitch = 0.0;
    int turns = 0;
    double r_in = 0.0;
    double eps_sub = 11.45;

    double r_out() const { return r_in + turns * pitch; }
    /// (r_out − r_in)/(r_out + r_in).
    double fill_ratio() const;

    void validate() const;
};

/// Shape constant of the frequency formula and current-sheet constants for a
/// circular coil.
struct CoilConstants {
    double xi = 0.81;
    double c1 = 1.0;
    double c2 = 2.5;
    double c3 = 0.0;
    double c4 = 0.2;
};

double cpw_eps_eff(const CpwGeometry& geom);
double cpw_frequency(const CpwGeometry& geom);
double cpw_impedance(const CpwGeometry& geom);

/// Line length giving the requested quarter-wave frequency for the cross-section of `geom`.
double cpw_length_for_frequency(const CpwGeometry& geom, double frequency);

/// Gap width (m) that makes cpw_impedance equal `target_ohm` for the given
/// center width. Brackets the root over gaps in [1e-3·w, 100·w].
double cpw_gap_for_impedance(double w, double target_ohm = 50.0, double eps_sub = 11.45,
                             double h = 1.5e-3);

/// Effective permittivity used for spirals: mean of air and substrate.
double asr_eps_eff(const AsrGeometry& geom);

/// Pure-spiral fundamental frequency. The coupling tail of a real device
/// lowers the measured value, so treat this as an upper bound.
double asr_frequency(const AsrGeometry& geom, const CoilConstants& consts = {});
double asr_inductance(const AsrGeometry& geom, const CoilConstants& consts = {});
double asr_impedance(const AsrGeometry& geom, const CoilConstants& consts = {});

/// Standing-wave voltage along the spiral radius, V0·cos(π (x/r_out)²).
double asr_voltage_profile(const AsrGeometry& geom, double x, double v0);

} // namespace resokit
