#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vqlab/queue_core.hpp"
#include "vqlab/traffic.hpp"

namespace vqlab {

struct VqConfig {
    double alpha = 2.5;
    double rate_update_interval = 1e-3;   // s, c' refresh tick
    double window = 1.0;                  // s
    TailMode tail_mode = TailMode::ArrivalEpoch;
    double nominal_rate = 0.0;            // bits/s, rate fallback for the first window
    double start_time = 0.0;              // arrivals before this only warm the queues

    void validate() const;
};

struct Vq3Params {
    double x_prime = 0.0;   // bytes
    double c_prime = 0.0;   // bits/s
};

// x' = x / alpha and c' = c / alpha + (1 - 1/alpha) r, evaluated as
// r + (c - r) / alpha so that c' - r equals (c - r) / alpha up to one rounding.
// alpha == 1 returns (x, c) unchanged. Throws ConfigError for alpha < 1,
// x < 0, c <= 0 or r < 0.
Vq3Params vq3_params(double x, double c, double r, double alpha);

struct MappedTail {
    double value = 0.0;
    bool below_resolution = false;   // u == 0
};

// u^(alpha^2).
MappedTail map_tail(double u, double alpha);

// Average input rate over the elapsed part of the current window.
class RateEstimator {
public:
    RateEstimator(double window_start, double fallback_rate, double min_elapsed);

    void observe(std::uint64_t bytes) { bytes_seen_ += bytes; }

    // bytes_seen * 8 / elapsed once `min_elapsed` has passed (and some bytes
    // were seen); the fallback otherwise.
    double sample(double now) const;

    // New window at `now`; the closing window's final sample becomes the fallback.
    void restart(double now);

    double window_start() const { return window_start_; }
    std::uint64_t bytes_seen() const { return bytes_seen_; }
    double fallback() const { return fallback_; }

private:
    double window_start_;
    double fallback_;
    double min_elapsed_;
    std::uint64_t bytes_seen_ = 0;
};

struct EstimateFlags {
    bool below_resolution = false;
    bool undefined_scalar = false;
    bool clamped = false;
    bool overload = false;

    bool any() const { return below_resolution || undefined_scalar || clamped || overload; }
    // '|'-joined flag names, or "none".
    std::string to_string() const;
};

struct LossEstimate {
    double value = 0.0;
    double pl0 = 0.0;
    double p0 = 0.0;
    double u = 0.0;
    double tail = 0.0;     // u^(alpha^2)
    double alpha = 1.0;
    EstimateFlags flags;
    double window_start = 0.0;
    double window_end = 0.0;
    std::uint64_t n_arrivals = 0;
};

// Assembles the estimate from one window's tallies.
LossEstimate estimate_from_window(const WindowStats& stats, double alpha, TailMode mode);

// Sequential state machine driving the VQ bank for one buffer size x and link
// rate c. c' is refreshed on a fixed tick aligned to the current window start.
class OnlineEstimator {
public:
    OnlineEstimator(double x, double c, const VqConfig& cfg);

    // Processes rate ticks up to pkt.time, then the arrival. Arrivals must be
    // time-sorted; arrivals before cfg.start_time are warm-up.
    void feed(const PacketEvent& pkt);

    // Processes rate ticks up to and including `t` (no arrival).
    void advance_to(double t);

    // Estimate over [window start, t] without resetting anything. The overload
    // flag is raised when the window's average rate so far is >= c.
    LossEstimate snapshot(double t);

    // Estimate for [window start, t]; resets tallies and starts the next window
    // at t. Backlogs persist.
    LossEstimate close_window(double t);

    // The c' rate schedule applied so far (only kept when enabled).
    void record_schedule(bool on) { record_ = on; }
    const std::vector<RateChange>& schedule() const { return schedule_; }

    const VqBank& bank() const { return bank_; }
    const WindowStats& window_stats() const { return stats_; }
    double x_prime() const { return x_prime_; }
    bool measuring() const { return measuring_; }

private:
    void begin_measurement(double t);
    void tick(double t);
    void process_ticks_until(double t);
    double next_tick_time() const;

    double x_;
    double c_;
    VqConfig cfg_;
    double x_prime_;
    VqBank bank_;
    RateEstimator rate_;
    WindowStats stats_;
    bool measuring_ = false;
    std::uint64_t ticks_done_ = 0;   // ticks processed in the current window
    double tick_origin_;
    bool record_ = false;
    std::vector<RateChange> schedule_;
};

// Consecutive windows of cfg.window seconds starting at cfg.start_time; emits
// an estimate for each complete window ending at or before `end_time`.
std::vector<LossEstimate> run_online(std::span<const PacketEvent> stream, double x, double c,
                                     const VqConfig& cfg, double end_time);

struct AlphaRecommendation {
    double alpha = 1.0;
    bool no_scaling_needed = false;   // target_tail >= optimal u
};

// sqrt(ln target / ln u*), placing VQ3 at the optimal operating point.
AlphaRecommendation recommend_alpha(double target_tail);

// `window_end_s,estimate,pl0,p0,u,alpha,flags` with a header row.
void write_estimates_csv(std::ostream& out, std::span<const LossEstimate> estimates);

}  // namespace vqlab
