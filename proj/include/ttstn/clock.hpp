#pragma once

#include "ttstn/time.hpp"

namespace ttstn {

// Drifting local oscillator. Between resyncs
//   local(t) = last_resync_local + (t - last_resync) * (1 + rho).
class LocalClock {
public:
    LocalClock() = default;
    LocalClock(double rho, double rho_max, SimTime offset = 0);

    double rho() const { return rho_; }
    void set_rho(double rho, double rho_max);

    SimTime local_at(SimTime real) const;
    SimTime real_at(SimTime local) const;

    // Phase correction only; the rate stays uncorrected.
    void resync(SimTime real, SimTime local);
    SimTime last_resync() const { return anchor_real_; }

private:
    double rho_ = 0.0;
    SimTime anchor_real_ = 0;
    SimTime anchor_local_ = 0;
};

}  // namespace ttstn
