#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "snapweight/geo.hpp"

namespace snapweight {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

enum class Constellation : std::uint8_t { Gps, Glonass, Galileo, Beidou };

/// L5 also stands for Galileo E5.
enum class Band : std::uint8_t { L1, L2, L5 };

std::string_view to_string(Constellation c);
std::string_view to_string(Band b);
std::optional<Constellation> parse_constellation(std::string_view s);
std::optional<Band> parse_band(std::string_view s);

struct LinkKey {
    Constellation constellation = Constellation::Gps;
    int sv_id = 1;
    Band band = Band::L1;

    auto operator<=>(const LinkKey&) const = default;
};

std::string to_string(const LinkKey& key);

struct PseudorangeMeasurement {
    Constellation constellation = Constellation::Gps;
    int sv_id = 1;
    Band band = Band::L1;
    double pseudorange = 0.0;  ///< meters, atmospheric/SV-clock corrections applied
    EcefPosition sat_pos;
    double cn0 = 0.0;        ///< dB-Hz
    double lock_time = 0.0;  ///< seconds

    LinkKey key() const { return {constellation, sv_id, band}; }
    bool operator==(const PseudorangeMeasurement&) const = default;
};

/// Receiver position plus one clock bias (seconds) per constellation.
struct NavState {
    EcefPosition position;
    std::map<Constellation, double> clock_bias;

    bool operator==(const NavState&) const = default;
};

struct Epoch {
    double time = 0.0;
    std::vector<PseudorangeMeasurement> measurements;
    std::optional<EcefPosition> truth;

    std::size_t size() const { return measurements.size(); }
    bool operator==(const Epoch&) const = default;
};

/// Sorts measurements by (constellation, sv_id, band).
void canonicalize(Epoch& epoch);

bool is_canonical(const Epoch& epoch);

/// Returns a description of the first violated invariant, if any.
std::optional<std::string> validate(const Epoch& epoch);

/// Sorted, de-duplicated constellations observed in the epoch.
std::vector<Constellation> constellations_in(const Epoch& epoch);

/// Geometric range to the satellite plus c times the constellation's clock
/// bias. Throws MissingClockBias.
double observation_function(const NavState& state, const PseudorangeMeasurement& m);

/// Pseudorange minus observation_function. Evaluated in extended precision so
/// the result is not limited by the ~4e-9 m spacing of doubles near 2e7 m.
double residual(const NavState& state, const PseudorangeMeasurement& m);

}  // namespace snapweight
