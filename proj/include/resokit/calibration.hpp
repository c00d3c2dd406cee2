#pragma once

#include "resokit/trace.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace resokit {

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// Frequency-dependent gain of one element of the input line, in dB
/// (negative for loss), linearly interpolated between the tabulated points.
class AttenuationComponent {
public:
    AttenuationComponent(std::string name, std::vector<double> freqs, std::vector<double> atten_db);

    const std::string& name() const { return name_; }
    const std::vector<double>& freqs() const { return freqs_; }
    const std::vector<double>& atten_db() const { return atten_db_; }
    bool covers(double f) const { return f >= freqs_.front() && f <= freqs_.back(); }
    /// Throws CalibrationError outside the tabulated range.
    double at(double f) const;

private:
    std::string name_;
    std::vector<double> freqs_;
    std::vector<double> atten_db_;
};

struct AttenuationChain {
    std::vector<AttenuationComponent> components;
};

/// Sum of the component values at f; 0 dB for an empty chain.
double total_attenuation(const AttenuationChain& chain, double f);

/// |S21_with|_dB − |S21_ref|_dB on the reference grid points that fall inside
/// the other trace's range, smoothed by a centered moving median of
/// `median_window` points (odd; 1 disables smoothing).
AttenuationComponent component_from_difference(const S21Trace& reference,
                                               const S21Trace& with_component, std::string name,
                                               int median_window = 11);

/// Synthetic input line: coaxial cable, 46 dB attenuator, lowpass filter with
/// 20 dB attenuator, and a bonding term chosen so that the chain total hits
/// the reference totals below exactly.
AttenuationChain reference_chain();

struct ChainAnchor {
    double f;
    double total_db;
};
const std::vector<ChainAnchor>& reference_chain_anchors();

/// Mean photon number for on-chip input power p_in (W):
///   n = 4 / (2π f Qc) · (1/Qc + 1/Qi)^−2 · p_in / (h f)
double photon_number(double p_in, double f, double qc, double qi);

/// VNA output power translated to the chip input, dBm.
double on_chip_power_dbm(double vna_dbm, double room_temperature_db, const AttenuationChain& chain,
                         double f);

void save_chain(std::ostream& out, const AttenuationChain& chain);
AttenuationChain load_chain(std::istream& in);

} // namespace resokit
