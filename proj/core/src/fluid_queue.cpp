#include "vqlab/fluid_queue.hpp"

#include <algorithm>
#include <cmath>

#include "vqlab/errors.hpp"
#include "vqlab/units.hpp"

namespace vqlab {

FluidQueue::FluidQueue(double rate_bps, double threshold_bytes, double start_time)
    : rate_bps_(rate_bps), threshold_(threshold_bytes), last_update_(start_time)
{
    if (!(rate_bps > 0.0) || !std::isfinite(rate_bps)) {
        throw ConfigError("fluid queue: service rate must be positive");
    }
}

double FluidQueue::drained(double backlog, double rate_bps, double elapsed)
{
    return std::max(0.0, backlog - to_bytes_per_second(rate_bps) * elapsed);
}

double FluidQueue::time_above_during(double backlog, double rate_bps, double elapsed,
                                     double threshold)
{
    if (!(backlog > threshold)) return 0.0;
    return std::min(elapsed, (backlog - threshold) / to_bytes_per_second(rate_bps));
}

void FluidQueue::advance(double now)
{
    if (now < last_update_) {
        throw InternalError("fluid queue: time regression");
    }
    const double elapsed = now - last_update_;
    if (elapsed > 0.0) {
        time_above_ += time_above_during(backlog_, rate_bps_, elapsed, threshold_);
        backlog_ = drained(backlog_, rate_bps_, elapsed);
    }
    last_update_ = now;
}

double FluidQueue::pending_time_above(double until) const
{
    if (until <= last_update_) return 0.0;
    return time_above_during(backlog_, rate_bps_, until - last_update_, threshold_);
}

void FluidQueue::set_rate(double now, double rate_bps)
{
    if (!(rate_bps > 0.0) || !std::isfinite(rate_bps)) {
        throw ConfigError("fluid queue: service rate must be positive");
    }
    advance(now);
    rate_bps_ = rate_bps;
}

}  // namespace vqlab
