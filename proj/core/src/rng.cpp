#include "snapweight/rng.hpp"

#include <sstream>

#include "snapweight/errors.hpp"

namespace snapweight {

std::string Rng::state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void Rng::restore(const std::string& state) {
    std::istringstream is(state);
    is >> engine_;
    if (!is) throw Error("malformed random engine state");
}

}  // namespace snapweight
