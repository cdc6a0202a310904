#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vqlab/fluid_queue.hpp"
#include "vqlab/traffic.hpp"

namespace vqlab {

struct QueueParams {
    double service_rate = 0.0;           // bits/s
    std::optional<double> buffer;        // bytes; nullopt = unbounded

    void validate() const;
};

struct DirectLossStats {
    std::uint64_t offered_bytes = 0;
    std::uint64_t lost_bytes = 0;
    double served_bytes = 0.0;
    double initial_backlog = 0.0;        // backlog when measurement started
    double final_backlog = 0.0;
    std::uint64_t offered_packets = 0;
    std::uint64_t lost_packets = 0;
    std::optional<double> first_loss_time;

    double byte_loss_ratio() const;
    double packet_loss_ratio() const;
    // initial + offered - served - lost - final; zero up to rounding.
    double conservation_error() const;
};

// Drop-tail FIFO with fluid drain. A packet is admitted when the server is
// idle, or when backlog + size fits in the buffer; otherwise it is dropped
// whole. With buffer 0 this is exactly the bufferless VQ1 rule.
class FiniteFifo {
public:
    explicit FiniteFifo(QueueParams params, double start_time = 0.0);

    // Returns true if admitted. Arrivals before `measure_from` (see
    // start_measurement) update the queue but are not tallied.
    bool offer(const PacketEvent& pkt);

    // Starts tallying from time `t`; earlier tallies are discarded.
    void start_measurement(double t);

    // Tallies with the served volume drained up to `now`.
    DirectLossStats stats(double now);
    const DirectLossStats& tallies() const { return stats_; }
    double backlog() const { return queue_.backlog(); }

private:
    QueueParams params_;
    FluidQueue queue_;
    DirectLossStats stats_;
    double accepted_bytes_ = 0.0;        // since measurement start
};

// Runs the whole stream through a finite FIFO. Only arrivals at or after
// `measure_from` are tallied; served bytes are accounted up to the last arrival.
DirectLossStats simulate_finite_fifo(std::span<const PacketEvent> stream, const QueueParams& params,
                                     double measure_from = 0.0);

enum class TailMode { ArrivalEpoch, TimeAverage };

struct RateChange {
    double time = 0.0;
    double rate = 0.0;   // bits/s
};

struct TailObservation {
    double probability = 0.0;
    bool defined = false;            // false when there were no arrivals
    std::uint64_t arrivals = 0;
    std::uint64_t exceed_count = 0;  // arrivals that saw backlog > threshold
    double exceed_time = 0.0;        // seconds with backlog > threshold
    double observed_time = 0.0;      // first to last arrival
};

// Unbounded fluid queue fed by `stream`. Arrival-epoch mode counts arrivals
// seeing backlog > threshold before their own admission; time-average mode
// reports the fraction of [first arrival, last arrival] spent above threshold.
// `schedule` lists rate changes (sorted by time); each applies to arrivals at
// or after its time.
TailObservation observe_tail(std::span<const PacketEvent> stream, double service_rate,
                             double threshold, TailMode mode,
                             std::span<const RateChange> schedule = {});

struct VqBankState {
    double vq1_residual = 0.0;       // bytes of work in the bufferless server
    double vq2_backlog = 0.0;
    double vq3_backlog = 0.0;
    double vq3_service_rate = 0.0;   // c', bits/s
    double last_update_time = 0.0;   // VQ1 / VQ2
    double vq3_last_update_time = 0.0;
};

struct WindowStats {
    std::uint64_t n_arrivals = 0;
    std::uint64_t vq1_lost_bytes = 0;
    std::uint64_t vq1_total_bytes = 0;
    std::uint64_t vq2_busy_seen = 0;
    std::uint64_t vq3_exceed_seen = 0;
    double vq2_busy_time = 0.0;
    double vq3_exceed_time = 0.0;
    double window_start = 0.0;
    double window_end = 0.0;
    std::uint64_t observed_bytes = 0;
};

// The three counter-based virtual queues fed by copies of one input:
// VQ1 bufferless at c, VQ2 unbounded at c, VQ3 unbounded at c' with a
// tail threshold x'. VQ1 and VQ2 are drained only when advanced; VQ3 is also
// drained when its rate changes.
class VqBank {
public:
    VqBank(double service_rate, double vq3_rate, double vq3_threshold, double start_time = 0.0);

    // Drains all three to `now`. Throws InternalError on time regression.
    void advance(double now);

    // Drains and then records the arrival. `stats` may be null (warm-up).
    void on_arrival(const PacketEvent& pkt, WindowStats* stats);

    // Drains VQ3 at the old rate up to `now`, then switches to `c_prime`.
    void set_vq3_rate(double now, double c_prime);

    void set_vq3_threshold(double x_prime);

    // Closes the time-average integrals at `now` into `stats` and starts new
    // ones, without draining VQ2/VQ3.
    void close_time_average(double now, WindowStats& stats);

    // Same integrals as close_time_average, leaving the bank untouched.
    void time_average_so_far(double now, WindowStats& stats) const;

    VqBankState state() const;
    double service_rate() const { return vq1_.rate(); }
    double vq3_threshold() const { return vq3_.threshold(); }

private:
    FluidQueue vq1_;
    FluidQueue vq2_;
    FluidQueue vq3_;
};

}  // namespace vqlab
