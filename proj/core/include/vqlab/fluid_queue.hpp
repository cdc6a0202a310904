#pragma once

namespace vqlab {

// Byte counter drained continuously at `rate` bits/s, clamped at zero.
// Also integrates the time during which the backlog exceeds `threshold`.
class FluidQueue {
public:
    FluidQueue(double rate_bps, double threshold_bytes = 0.0, double start_time = 0.0);

    // Drains up to `now`. Throws InternalError if `now` precedes the last update.
    void advance(double now);

    // Drains at the old rate up to `now`, then switches. Throws ConfigError
    // unless rate_bps > 0.
    void set_rate(double now, double rate_bps);

    void add(double bytes) { backlog_ += bytes; }

    double backlog() const { return backlog_; }
    double rate() const { return rate_bps_; }
    double threshold() const { return threshold_; }
    double last_update() const { return last_update_; }

    // Time above threshold accumulated by advance() since the last reset.
    double time_above() const { return time_above_; }

    // Time above threshold in [last_update(), until] without mutating state.
    double pending_time_above(double until) const;

    // Starts a new accumulation; `carry` is added to the fresh total.
    void reset_time_above(double carry = 0.0) { time_above_ = carry; }

    // Backlog after draining for `elapsed` seconds from `backlog` at `rate_bps`.
    static double drained(double backlog, double rate_bps, double elapsed);

    // Portion of `elapsed` during which a draining backlog stays above `threshold`.
    static double time_above_during(double backlog, double rate_bps, double elapsed,
                                    double threshold);

private:
    double rate_bps_;
    double threshold_;
    double last_update_;
    double backlog_ = 0.0;
    double time_above_ = 0.0;
};

}  // namespace vqlab
