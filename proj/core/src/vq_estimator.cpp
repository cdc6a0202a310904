#include "vqlab/vq_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "vqlab/analysis.hpp"
#include "vqlab/errors.hpp"
#include "vqlab/mva.hpp"

namespace vqlab {

void VqConfig::validate() const
{
    if (!(alpha >= 1.0) || !std::isfinite(alpha)) {
        throw ConfigError("vq: alpha must be >= 1");
    }
    if (!(rate_update_interval > 0.0)) {
        throw ConfigError("vq: rate_update_interval must be positive");
    }
    if (!(window > 0.0) || window < rate_update_interval) {
        throw ConfigError("vq: window must be positive and >= rate_update_interval");
    }
    if (!(nominal_rate >= 0.0)) {
        throw ConfigError("vq: nominal_rate must be >= 0");
    }
    if (!(start_time >= 0.0)) {
        throw ConfigError("vq: start_time must be >= 0");
    }
}

Vq3Params vq3_params(double x, double c, double r, double alpha)
{
    if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw ConfigError("vq3_params: alpha must be >= 1");
    if (!(x >= 0.0)) throw ConfigError("vq3_params: x must be >= 0");
    if (!(c > 0.0)) throw ConfigError("vq3_params: c must be positive");
    if (!(r >= 0.0)) throw ConfigError("vq3_params: r must be >= 0");
    if (alpha == 1.0) return {x, c};
    return {x / alpha, r + (c - r) / alpha};
}

MappedTail map_tail(double u, double alpha)
{
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("map_tail: u must lie in [0, 1]");
    if (!(alpha >= 1.0)) throw DomainError("map_tail: alpha must be >= 1");
    if (u == 0.0) return {0.0, true};
    const long double a2 = static_cast<long double>(alpha) * alpha;
    return {static_cast<double>(std::pow(static_cast<long double>(u), a2)), false};
}

RateEstimator::RateEstimator(double window_start, double fallback_rate, double min_elapsed)
    : window_start_(window_start), fallback_(fallback_rate), min_elapsed_(min_elapsed)
{
}

double RateEstimator::sample(double now) const
{
    const double elapsed = now - window_start_;
    // Tick times are window_start + k * interval; allow for their rounding.
    if (elapsed < min_elapsed_ * (1.0 - 1e-9) || bytes_seen_ == 0) return fallback_;
    return static_cast<double>(bytes_seen_) * 8.0 / elapsed;
}

void RateEstimator::restart(double now)
{
    fallback_ = sample(now);
    window_start_ = now;
    bytes_seen_ = 0;
}

std::string EstimateFlags::to_string() const
{
    std::string out;
    const auto append = [&out](bool on, const char* name) {
        if (!on) return;
        if (!out.empty()) out += '|';
        out += name;
    };
    append(below_resolution, "below_resolution");
    append(undefined_scalar, "undefined_scalar");
    append(clamped, "clamped");
    append(overload, "overload");
    return out.empty() ? "none" : out;
}

LossEstimate estimate_from_window(const WindowStats& stats, double alpha, TailMode mode)
{
    LossEstimate est;
    est.alpha = alpha;
    est.window_start = stats.window_start;
    est.window_end = stats.window_end;
    est.n_arrivals = stats.n_arrivals;
    if (stats.n_arrivals == 0) {
        est.flags.undefined_scalar = true;
        est.flags.below_resolution = true;
        return est;
    }

    const auto ratio = [](double num, double den) { return std::clamp(num / den, 0.0, 1.0); };
    est.pl0 = ratio(static_cast<double>(stats.vq1_lost_bytes), static_cast<double>(stats.vq1_total_bytes));
    if (mode == TailMode::ArrivalEpoch) {
        const auto n = static_cast<double>(stats.n_arrivals);
        est.p0 = ratio(static_cast<double>(stats.vq2_busy_seen), n);
        est.u = ratio(static_cast<double>(stats.vq3_exceed_seen), n);
    } else {
        const double len = stats.window_end - stats.window_start;
        if (len > 0.0) {
            est.p0 = ratio(stats.vq2_busy_time, len);
            est.u = ratio(stats.vq3_exceed_time, len);
        }
    }

    const auto mapped = map_tail(est.u, alpha);
    est.tail = mapped.value;
    est.flags.below_resolution = mapped.below_resolution;

    const auto assembled = mva::assemble_loss(est.pl0, est.p0, est.tail);
    est.value = assembled.value;
    est.flags.undefined_scalar = assembled.undefined_scalar;
    est.flags.clamped = assembled.clamped;
    return est;
}

OnlineEstimator::OnlineEstimator(double x, double c, const VqConfig& cfg)
    : x_(x),
      c_(c),
      cfg_(cfg),
      x_prime_(vq3_params(x, c, cfg.nominal_rate, cfg.alpha).x_prime),
      bank_(c, vq3_params(x, c, cfg.nominal_rate, cfg.alpha).c_prime, x_prime_, 0.0),
      rate_(0.0, cfg.nominal_rate, cfg.rate_update_interval),
      tick_origin_(0.0)
{
    cfg_.validate();
    if (cfg_.start_time == 0.0) begin_measurement(0.0);
}

double OnlineEstimator::next_tick_time() const
{
    return tick_origin_ + static_cast<double>(ticks_done_) * cfg_.rate_update_interval;
}

void OnlineEstimator::tick(double t)
{
    const double r = rate_.sample(t);
    const double c_prime = vq3_params(x_, c_, r, cfg_.alpha).c_prime;
    bank_.set_vq3_rate(t, c_prime);
    if (record_) schedule_.push_back({t, c_prime});
}

void OnlineEstimator::process_ticks_until(double t)
{
    for (double next = next_tick_time(); next <= t; next = next_tick_time()) {
        tick(next);
        ++ticks_done_;
    }
}

void OnlineEstimator::begin_measurement(double t)
{
    for (double next = next_tick_time(); next < t; next = next_tick_time()) {
        tick(next);
        ++ticks_done_;
    }
    measuring_ = true;
    tick_origin_ = t;
    ticks_done_ = 0;
    rate_ = RateEstimator(t, cfg_.nominal_rate, cfg_.rate_update_interval);
    WindowStats discard;
    bank_.close_time_average(t, discard);
    stats_ = WindowStats{};
    stats_.window_start = t;
}

void OnlineEstimator::advance_to(double t)
{
    if (!measuring_ && t >= cfg_.start_time) begin_measurement(cfg_.start_time);
    process_ticks_until(t);
}

void OnlineEstimator::feed(const PacketEvent& pkt)
{
    advance_to(pkt.time);
    bank_.on_arrival(pkt, measuring_ ? &stats_ : nullptr);
    rate_.observe(pkt.size);
}

LossEstimate OnlineEstimator::snapshot(double t)
{
    if (!measuring_ && t >= cfg_.start_time) begin_measurement(cfg_.start_time);
    WindowStats view = stats_;
    view.window_end = t;
    bank_.time_average_so_far(t, view);
    auto est = estimate_from_window(view, cfg_.alpha, cfg_.tail_mode);
    est.flags.overload = measuring_ && rate_.sample(t) >= c_;
    return est;
}

LossEstimate OnlineEstimator::close_window(double t)
{
    if (!measuring_) begin_measurement(cfg_.start_time);
    for (double next = next_tick_time(); next < t; next = next_tick_time()) {
        tick(next);
        ++ticks_done_;
    }
    stats_.window_end = t;
    bank_.close_time_average(t, stats_);
    auto est = estimate_from_window(stats_, cfg_.alpha, cfg_.tail_mode);
    est.flags.overload = rate_.sample(t) >= c_;

    rate_.restart(t);
    tick_origin_ = t;
    ticks_done_ = 0;
    stats_ = WindowStats{};
    stats_.window_start = t;
    return est;
}

std::vector<LossEstimate> run_online(std::span<const PacketEvent> stream, double x, double c,
                                     const VqConfig& cfg, double end_time)
{
    cfg.validate();
    if (!is_time_sorted(stream)) throw InternalError("run_online: stream not sorted");

    OnlineEstimator est(x, c, cfg);
    std::vector<LossEstimate> out;
    std::size_t k = 1;
    const auto window_end = [&cfg](std::size_t i) {
        return cfg.start_time + static_cast<double>(i) * cfg.window;
    };
    for (const auto& pkt : stream) {
        if (pkt.time >= end_time) break;
        while (pkt.time >= window_end(k) && window_end(k) <= end_time) {
            out.push_back(est.close_window(window_end(k)));
            ++k;
        }
        est.feed(pkt);
    }
    while (window_end(k) <= end_time) {
        out.push_back(est.close_window(window_end(k)));
        ++k;
    }
    return out;
}

AlphaRecommendation recommend_alpha(double target_tail)
{
    if (!(target_tail > 0.0 && target_tail < 1.0)) {
        throw DomainError("recommend_alpha: target must lie in (0, 1)");
    }
    const double u_star = analysis::optimal_u();
    if (target_tail >= u_star) return {1.0, true};
    return {std::sqrt(std::log(target_tail) / std::log(u_star)), false};
}

void write_estimates_csv(std::ostream& out, std::span<const LossEstimate> estimates)
{
    out << "window_end_s,estimate,pl0,p0,u,alpha,flags\n";
    char buf[192];
    for (const auto& e : estimates) {
        const int n = std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,", e.window_end,
                                    e.value, e.pl0, e.p0, e.u, e.alpha);
        out.write(buf, n);
        out << e.flags.to_string() << '\n';
    }
}

}  // namespace vqlab
