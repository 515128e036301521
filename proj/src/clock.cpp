#include "ttstn/clock.hpp"

#include "ttstn/error.hpp"

#include <cmath>
#include <string>

namespace ttstn {

namespace {

// Symmetric rounding so negative offsets round like positive ones.
SimTime round_signed(double v)
{
    return v < 0 ? -round_half_up(-v) : round_half_up(v);
}

}  // namespace

LocalClock::LocalClock(double rho, double rho_max, SimTime offset)
    : anchor_local_(offset)
{
    set_rho(rho, rho_max);
}

void LocalClock::set_rho(double rho, double rho_max)
{
    if (!std::isfinite(rho) || std::fabs(rho) > rho_max || rho <= -1.0)
        throw Error(ErrorCode::Range, "drift " + std::to_string(rho) + " exceeds rho_max " + std::to_string(rho_max));
    rho_ = rho;
}

SimTime LocalClock::local_at(SimTime real) const
{
    return anchor_local_ + round_signed(static_cast<double>(real - anchor_real_) * (1.0 + rho_));
}

SimTime LocalClock::real_at(SimTime local) const
{
    return anchor_real_ + round_signed(static_cast<double>(local - anchor_local_) / (1.0 + rho_));
}

void LocalClock::resync(SimTime real, SimTime local)
{
    anchor_real_ = real;
    anchor_local_ = local;
}

}  // namespace ttstn
