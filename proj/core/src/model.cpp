#include "snapweight/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "snapweight/errors.hpp"

namespace snapweight {

std::string_view to_string(Constellation c) {
    switch (c) {
        case Constellation::Gps: return "GPS";
        case Constellation::Glonass: return "GLONASS";
        case Constellation::Galileo: return "GALILEO";
        case Constellation::Beidou: return "BEIDOU";
    }
    return "UNKNOWN";
}

std::string_view to_string(Band b) {
    switch (b) {
        case Band::L1: return "L1";
        case Band::L2: return "L2";
        case Band::L5: return "L5";
    }
    return "UNKNOWN";
}

std::optional<Constellation> parse_constellation(std::string_view s) {
    for (auto c : {Constellation::Gps, Constellation::Glonass, Constellation::Galileo,
                   Constellation::Beidou}) {
        if (s == to_string(c)) return c;
    }
    return std::nullopt;
}

std::optional<Band> parse_band(std::string_view s) {
    for (auto b : {Band::L1, Band::L2, Band::L5}) {
        if (s == to_string(b)) return b;
    }
    return std::nullopt;
}

std::string to_string(const LinkKey& key) {
    return std::string(to_string(key.constellation)) + "#" + std::to_string(key.sv_id) + "/" +
           std::string(to_string(key.band));
}

void canonicalize(Epoch& epoch) {
    std::stable_sort(epoch.measurements.begin(), epoch.measurements.end(),
                     [](const auto& a, const auto& b) { return a.key() < b.key(); });
}

bool is_canonical(const Epoch& epoch) {
    return std::is_sorted(epoch.measurements.begin(), epoch.measurements.end(),
                          [](const auto& a, const auto& b) { return a.key() < b.key(); });
}

std::optional<std::string> validate(const Epoch& epoch) {
    if (epoch.measurements.empty()) return "epoch has no measurements";
    if (!std::isfinite(epoch.time)) return "epoch time is not finite";
    std::set<LinkKey> seen;
    for (const auto& m : epoch.measurements) {
        const std::string who = to_string(m.key());
        if (m.sv_id < 1) return who + ": sv_id must be >= 1";
        if (!(m.pseudorange > 1e6 && m.pseudorange < 5e7))
            return who + ": pseudorange outside (1e6, 5e7) m";
        if (!(m.cn0 >= 0.0 && m.cn0 <= 60.0)) return who + ": cn0 outside [0, 60] dB-Hz";
        if (!(m.lock_time >= 0.0) || !std::isfinite(m.lock_time))
            return who + ": lock_time must be finite and >= 0";
        if (!std::isfinite(m.sat_pos.x) || !std::isfinite(m.sat_pos.y) ||
            !std::isfinite(m.sat_pos.z))
            return who + ": satellite position not finite";
        if (!seen.insert(m.key()).second)
            return who + ": duplicate (constellation, sv, band) in epoch";
    }
    if (epoch.truth) {
        const auto& t = *epoch.truth;
        if (!std::isfinite(t.x) || !std::isfinite(t.y) || !std::isfinite(t.z))
            return "truth position not finite";
    }
    return std::nullopt;
}

std::vector<Constellation> constellations_in(const Epoch& epoch) {
    std::vector<Constellation> out;
    for (const auto& m : epoch.measurements) out.push_back(m.constellation);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

double clock_bias_for(const NavState& state, Constellation c) {
    const auto it = state.clock_bias.find(c);
    if (it == state.clock_bias.end()) throw MissingClockBias(std::string(to_string(c)));
    return it->second;
}

long double geometric_range(const EcefPosition& rx, const EcefPosition& sat) {
    const long double dx = static_cast<long double>(rx.x) - sat.x;
    const long double dy = static_cast<long double>(rx.y) - sat.y;
    const long double dz = static_cast<long double>(rx.z) - sat.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

double observation_function(const NavState& state, const PseudorangeMeasurement& m) {
    const double bias = clock_bias_for(state, m.constellation);
    return static_cast<double>(geometric_range(state.position, m.sat_pos) +
                               static_cast<long double>(kSpeedOfLight) * bias);
}

double residual(const NavState& state, const PseudorangeMeasurement& m) {
    const double bias = clock_bias_for(state, m.constellation);
    return static_cast<double>(static_cast<long double>(m.pseudorange) -
                               geometric_range(state.position, m.sat_pos) -
                               static_cast<long double>(kSpeedOfLight) * bias);
}

}  // namespace snapweight
