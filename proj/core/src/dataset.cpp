#include "snapweight/dataset.hpp"

#include <cmath>

#include "snapweight/errors.hpp"

namespace snapweight {

std::string_view to_string(Environment e) {
    switch (e) {
        case Environment::OpenSky: return "open_sky";
        case Environment::Suburban: return "suburban";
        case Environment::UrbanCanyon: return "urban_canyon";
    }
    return "?";
}

std::optional<Environment> parse_environment(std::string_view s) {
    for (auto e : {Environment::OpenSky, Environment::Suburban, Environment::UrbanCanyon})
        if (s == to_string(e)) return e;
    return std::nullopt;
}

std::string_view to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::Test: return "test";
    }
    return "?";
}

std::optional<Split> parse_split(std::string_view s) {
    for (auto v : {Split::Train, Split::Validation, Split::Test})
        if (s == to_string(v)) return v;
    return std::nullopt;
}

void SplitFractions::validate() const {
    if (!(train > 0.0 && train < 1.0)) throw ConfigInvalid("split.train", "must be in (0, 1)");
    if (!(validation > 0.0 && validation < 1.0))
        throw ConfigInvalid("split.validation", "must be in (0, 1)");
    if (!(test > 0.0 && test < 1.0)) throw ConfigInvalid("split.test", "must be in (0, 1)");
    if (std::abs(train + validation + test - 1.0) > 1e-9)
        throw ConfigInvalid("split", "fractions must sum to 1");
}

SplitCounts split_counts(std::size_t n, const SplitFractions& f) {
    f.validate();
    if (n < 3) throw ConfigInvalid("sessions", "at least 3 sessions per profile are needed to split");
    const auto part = [&](double frac) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(frac * static_cast<double>(n))));
    };
    SplitCounts c;
    c.validation = part(f.validation);
    c.test = part(f.test);
    if (c.validation + c.test >= n) c.validation = c.test = 1;
    c.train = n - c.validation - c.test;
    return c;
}

const SessionInfo* Dataset::find_session(std::string_view id) const {
    for (const auto& s : sessions)
        if (s.id == id) return &s;
    return nullptr;
}

std::vector<const EpochRecord*> Dataset::session_epochs(std::string_view id) const {
    std::vector<const EpochRecord*> out;
    for (const auto& e : epochs)
        if (e.session_id == id) out.push_back(&e);
    return out;
}

std::vector<const SessionInfo*> Dataset::sessions_in(Split split) const {
    std::vector<const SessionInfo*> out;
    for (const auto& s : sessions)
        if (s.split == split) out.push_back(&s);
    return out;
}

}  // namespace snapweight
