#include "vqlab/queue_core.hpp"

#include <algorithm>
#include <cmath>

#include "vqlab/errors.hpp"

namespace vqlab {

void QueueParams::validate() const
{
    if (!(service_rate > 0.0) || !std::isfinite(service_rate)) {
        throw ConfigError("queue: service_rate must be positive");
    }
    if (buffer && !(*buffer >= 0.0)) {
        throw ConfigError("queue: buffer must be >= 0");
    }
}

double DirectLossStats::byte_loss_ratio() const
{
    return offered_bytes == 0 ? 0.0
                              : static_cast<double>(lost_bytes) / static_cast<double>(offered_bytes);
}

double DirectLossStats::packet_loss_ratio() const
{
    return offered_packets == 0
               ? 0.0
               : static_cast<double>(lost_packets) / static_cast<double>(offered_packets);
}

double DirectLossStats::conservation_error() const
{
    return initial_backlog + static_cast<double>(offered_bytes) - served_bytes -
           static_cast<double>(lost_bytes) - final_backlog;
}

FiniteFifo::FiniteFifo(QueueParams params, double start_time)
    : params_(params), queue_(params.service_rate, 0.0, start_time)
{
    params_.validate();
    if (!params_.buffer) {
        throw ConfigError("finite FIFO requires a finite buffer");
    }
}

void FiniteFifo::start_measurement(double t)
{
    if (t < queue_.last_update()) {
        throw InternalError("finite FIFO: measurement start precedes last update");
    }
    // Evaluated without draining, so the queue's breakpoints stay arrival-only.
    stats_ = DirectLossStats{};
    stats_.initial_backlog =
        FluidQueue::drained(queue_.backlog(), queue_.rate(), t - queue_.last_update());
    accepted_bytes_ = 0.0;
}

bool FiniteFifo::offer(const PacketEvent& pkt)
{
    queue_.advance(pkt.time);
    const double size = pkt.size;
    const double backlog = queue_.backlog();
    const bool admit = backlog == 0.0 || backlog + size <= *params_.buffer;

    stats_.offered_bytes += pkt.size;
    ++stats_.offered_packets;
    if (admit) {
        queue_.add(size);
        accepted_bytes_ += size;
    } else {
        stats_.lost_bytes += pkt.size;
        ++stats_.lost_packets;
        if (!stats_.first_loss_time) stats_.first_loss_time = pkt.time;
    }
    return admit;
}

DirectLossStats FiniteFifo::stats(double now)
{
    queue_.advance(now);
    DirectLossStats out = stats_;
    out.final_backlog = queue_.backlog();
    out.served_bytes = out.initial_backlog + accepted_bytes_ - out.final_backlog;
    return out;
}

DirectLossStats simulate_finite_fifo(std::span<const PacketEvent> stream, const QueueParams& params,
                                     double measure_from)
{
    params.validate();
    if (!params.buffer) {
        throw ConfigError("simulate_finite_fifo requires a finite buffer");
    }
    if (!is_time_sorted(stream)) {
        throw InternalError("simulate_finite_fifo: stream not sorted");
    }

    const double start = stream.empty() ? measure_from : std::min(stream.front().time, measure_from);
    FiniteFifo fifo(params, start);
    bool measuring = false;
    for (const auto& pkt : stream) {
        if (!measuring && pkt.time >= measure_from) {
            fifo.start_measurement(measure_from);
            measuring = true;
        }
        fifo.offer(pkt);
    }
    if (!measuring) {
        fifo.start_measurement(measure_from);
        return fifo.stats(measure_from);
    }
    return fifo.stats(stream.back().time);
}

TailObservation observe_tail(std::span<const PacketEvent> stream, double service_rate,
                             double threshold, TailMode mode, std::span<const RateChange> schedule)
{
    if (!is_time_sorted(stream)) {
        throw InternalError("observe_tail: stream not sorted");
    }
    TailObservation obs;
    if (stream.empty()) return obs;

    const double first = stream.front().time;
    FluidQueue queue(service_rate, threshold, first);
    std::size_t next_change = 0;
    while (next_change < schedule.size() && schedule[next_change].time <= first) {
        queue.set_rate(first, schedule[next_change].rate);
        ++next_change;
    }

    for (const auto& pkt : stream) {
        while (next_change < schedule.size() && schedule[next_change].time <= pkt.time) {
            queue.set_rate(schedule[next_change].time, schedule[next_change].rate);
            ++next_change;
        }
        queue.advance(pkt.time);
        if (queue.backlog() > threshold) ++obs.exceed_count;
        queue.add(pkt.size);
        ++obs.arrivals;
    }

    obs.exceed_time = queue.time_above();
    obs.observed_time = stream.back().time - first;
    obs.defined = true;
    if (mode == TailMode::ArrivalEpoch) {
        obs.probability = static_cast<double>(obs.exceed_count) / static_cast<double>(obs.arrivals);
    } else {
        obs.defined = obs.observed_time > 0.0;
        obs.probability = obs.defined ? obs.exceed_time / obs.observed_time : 0.0;
    }
    return obs;
}

VqBank::VqBank(double service_rate, double vq3_rate, double vq3_threshold, double start_time)
    : vq1_(service_rate, 0.0, start_time),
      vq2_(service_rate, 0.0, start_time),
      vq3_(vq3_rate, vq3_threshold, start_time)
{
    if (!(vq3_threshold >= 0.0)) {
        throw ConfigError("VQ3 threshold must be >= 0");
    }
}

void VqBank::advance(double now)
{
    vq1_.advance(now);
    vq2_.advance(now);
    vq3_.advance(now);
}

void VqBank::on_arrival(const PacketEvent& pkt, WindowStats* stats)
{
    advance(pkt.time);
    const double size = pkt.size;

    const bool vq1_busy = vq1_.backlog() > 0.0;
    const bool vq2_busy = vq2_.backlog() > 0.0;
    const bool vq3_exceeded = vq3_.backlog() > vq3_.threshold();

    if (!vq1_busy) vq1_.add(size);
    vq2_.add(size);
    vq3_.add(size);

    if (stats) {
        ++stats->n_arrivals;
        stats->observed_bytes += pkt.size;
        stats->vq1_total_bytes += pkt.size;
        if (vq1_busy) stats->vq1_lost_bytes += pkt.size;
        if (vq2_busy) ++stats->vq2_busy_seen;
        if (vq3_exceeded) ++stats->vq3_exceed_seen;
    }
}

void VqBank::set_vq3_rate(double now, double c_prime)
{
    if (!(c_prime > 0.0)) {
        throw ConfigError("VQ3 service rate must be positive");
    }
    vq3_.set_rate(now, c_prime);
}

void VqBank::set_vq3_threshold(double x_prime)
{
    if (!(x_prime >= 0.0)) {
        throw ConfigError("VQ3 threshold must be >= 0");
    }
    FluidQueue replacement(vq3_.rate(), x_prime, vq3_.last_update());
    replacement.add(vq3_.backlog());
    vq3_ = replacement;
}

void VqBank::close_time_average(double now, WindowStats& stats)
{
    const double vq2_pending = vq2_.pending_time_above(now);
    const double vq3_pending = vq3_.pending_time_above(now);
    stats.vq2_busy_time = vq2_.time_above() + vq2_pending;
    stats.vq3_exceed_time = vq3_.time_above() + vq3_pending;
    vq2_.reset_time_above(-vq2_pending);
    vq3_.reset_time_above(-vq3_pending);
}

void VqBank::time_average_so_far(double now, WindowStats& stats) const
{
    stats.vq2_busy_time = vq2_.time_above() + vq2_.pending_time_above(now);
    stats.vq3_exceed_time = vq3_.time_above() + vq3_.pending_time_above(now);
}

VqBankState VqBank::state() const
{
    return VqBankState{vq1_.backlog(), vq2_.backlog(), vq3_.backlog(), vq3_.rate(),
                       vq1_.last_update(),   vq3_.last_update()};
}

}  // namespace vqlab
