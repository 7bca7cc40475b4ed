#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "snapweight/model.hpp"

namespace snapweight {

enum class Environment { OpenSky, Suburban, UrbanCanyon };

std::string_view to_string(Environment e);
std::optional<Environment> parse_environment(std::string_view s);

enum class Split { Train, Validation, Test };

std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view s);

struct SplitFractions {
    double train = 0.6;
    double validation = 0.2;
    double test = 0.2;

    /// Throws ConfigInvalid.
    void validate() const;
};

struct SessionInfo {
    std::string id;
    Environment profile = Environment::UrbanCanyon;
    Split split = Split::Train;
    std::uint64_t seed = 0;

    bool operator==(const SessionInfo&) const = default;
};

struct EpochRecord {
    std::string session_id;
    Epoch epoch;

    bool operator==(const EpochRecord&) const = default;
};

/// Epochs are grouped by session and time-ordered within a session.
struct Dataset {
    std::uint64_t seed = 0;
    std::vector<SessionInfo> sessions;
    std::vector<EpochRecord> epochs;

    bool operator==(const Dataset&) const = default;

    const SessionInfo* find_session(std::string_view id) const;
    /// Epochs of one session, in stored order.
    std::vector<const EpochRecord*> session_epochs(std::string_view id) const;
    std::vector<const SessionInfo*> sessions_in(Split split) const;
};

/// Session counts for a group of n sessions: validation and test each get
/// max(1, round(fraction * n)), training gets the rest. Throws ConfigInvalid
/// when fewer than three sessions are available.
struct SplitCounts {
    std::size_t train = 0;
    std::size_t validation = 0;
    std::size_t test = 0;
};
SplitCounts split_counts(std::size_t n, const SplitFractions& f);

}  // namespace snapweight
