#include "vqlab/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <tuple>

#include "vqlab/errors.hpp"

namespace vqlab {

namespace {

bool positive_finite(double v)
{
    return std::isfinite(v) && v > 0.0;
}

double exit_rate(const Mmpp3Spec& spec, std::size_t i)
{
    double total = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
        if (j != i) total += spec.transition_rates[i][j];
    }
    return total;
}

// Every state reaches every other state through positive-rate transitions.
bool irreducible(const Mmpp3Spec& spec)
{
    std::array<std::array<bool, 3>, 3> reach{};
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            reach[i][j] = (i == j) || spec.transition_rates[i][j] > 0.0;
        }
    }
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                reach[i][j] = reach[i][j] || (reach[i][k] && reach[k][j]);
            }
        }
    }
    for (const auto& row : reach) {
        for (bool r : row) {
            if (!r) return false;
        }
    }
    return true;
}

double exponential(std::mt19937_64& rng, double mean)
{
    return std::exponential_distribution<double>(1.0 / mean)(rng);
}

}  // namespace

void validate(const OnOffSpec& spec)
{
    if (!positive_finite(spec.mean_on) || !positive_finite(spec.mean_off)) {
        throw ConfigError("on-off: mean_on and mean_off must be positive");
    }
    if (!positive_finite(spec.on_rate)) {
        throw ConfigError("on-off: on_rate must be positive");
    }
    if (spec.packet_size == 0) {
        throw ConfigError("on-off: packet_size must be positive");
    }
}

void validate(const Mmpp3Spec& spec)
{
    for (double lambda : spec.state_rates) {
        if (!positive_finite(lambda)) {
            throw ConfigError("mmpp3: state rates must be positive");
        }
    }
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            if (i == j) continue;
            const double q = spec.transition_rates[i][j];
            if (!std::isfinite(q) || q < 0.0) {
                throw ConfigError("mmpp3: transition rates must be non-negative");
            }
        }
        if (exit_rate(spec, i) <= 0.0) {
            throw ConfigError("mmpp3: state " + std::to_string(i + 1) + " has no exit transition");
        }
    }
    if (!irreducible(spec)) {
        throw ConfigError("mmpp3: modulating chain is reducible");
    }
    if (spec.packet_size == 0) {
        throw ConfigError("mmpp3: packet_size must be positive");
    }
}

void validate(const TrafficSpec& spec)
{
    std::visit([](const auto& s) { validate(s); }, spec);
}

std::array<double, 3> mmpp_stationary_distribution(const Mmpp3Spec& spec)
{
    validate(spec);

    // Rows 0..1 of Q^T pi = 0 plus the normalisation row.
    long double a[3][4] = {};
    for (std::size_t j = 0; j < 2; ++j) {
        for (std::size_t i = 0; i < 3; ++i) {
            a[j][i] = (i == j) ? -static_cast<long double>(exit_rate(spec, i))
                               : static_cast<long double>(spec.transition_rates[i][j]);
        }
        a[j][3] = 0.0L;
    }
    for (std::size_t i = 0; i < 3; ++i) a[2][i] = 1.0L;
    a[2][3] = 1.0L;

    for (std::size_t col = 0; col < 3; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < 3; ++r) {
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        }
        if (a[pivot][col] == 0.0L) {
            throw ConfigError("mmpp3: singular balance equations");
        }
        if (pivot != col) {
            for (std::size_t k = 0; k < 4; ++k) std::swap(a[col][k], a[pivot][k]);
        }
        for (std::size_t r = 0; r < 3; ++r) {
            if (r == col) continue;
            const long double f = a[r][col] / a[col][col];
            for (std::size_t k = col; k < 4; ++k) a[r][k] -= f * a[col][k];
        }
    }

    std::array<double, 3> pi{};
    long double sum = 0.0L;
    for (std::size_t i = 0; i < 3; ++i) {
        const long double p = a[i][3] / a[i][i];
        pi[i] = static_cast<double>(std::max(p, 0.0L));
        sum += pi[i];
    }
    for (double& p : pi) p = static_cast<double>(p / sum);
    return pi;
}

double balance_residual(const Mmpp3Spec& spec, const std::array<double, 3>& pi)
{
    double worst = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
        long double flow = 0.0L;
        for (std::size_t i = 0; i < 3; ++i) {
            const double q = (i == j) ? -exit_rate(spec, i) : spec.transition_rates[i][j];
            flow += static_cast<long double>(pi[i]) * q;
        }
        worst = std::max(worst, static_cast<double>(std::fabs(flow)));
    }
    return worst;
}

double per_source_rate(const TrafficSpec& spec)
{
    if (const auto* onoff = std::get_if<OnOffSpec>(&spec)) {
        validate(*onoff);
        return onoff->on_rate * onoff->duty_cycle();
    }
    const auto& mmpp = std::get<Mmpp3Spec>(spec);
    const auto pi = mmpp_stationary_distribution(mmpp);
    double packets_per_s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) packets_per_s += pi[i] * mmpp.state_rates[i];
    return packets_per_s * mmpp.packet_size * 8.0;
}

StationaryStats stationary_stats(const TrafficSpec& spec)
{
    StationaryStats stats;
    if (const auto* onoff = std::get_if<OnOffSpec>(&spec)) {
        validate(*onoff);
        stats.duty_cycle = onoff->duty_cycle();
        stats.mean_rate = static_cast<double>(onoff->n_sources) * onoff->on_rate * *stats.duty_cycle;
        return stats;
    }
    const auto& mmpp = std::get<Mmpp3Spec>(spec);
    const auto pi = mmpp_stationary_distribution(mmpp);
    stats.state_distribution.assign(pi.begin(), pi.end());
    double packets_per_s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) packets_per_s += pi[i] * mmpp.state_rates[i];
    stats.mean_rate = static_cast<double>(mmpp.n_sources) * packets_per_s * mmpp.packet_size * 8.0;
    return stats;
}

std::size_t source_count(const TrafficSpec& spec)
{
    return std::visit([](const auto& s) { return s.n_sources; }, spec);
}

TrafficSpec with_source_count(TrafficSpec spec, std::size_t n_sources)
{
    std::visit([n_sources](auto& s) { s.n_sources = n_sources; }, spec);
    return spec;
}

std::size_t sources_for_load(const TrafficSpec& spec, double service_rate, double load)
{
    if (!(load > 0.0 && load < 1.0)) {
        throw ConfigError("load must satisfy 0 < rho < 1");
    }
    if (!positive_finite(service_rate)) {
        throw ConfigError("service_rate must be positive");
    }
    const double n = std::round(load * service_rate / per_source_rate(spec));
    return static_cast<std::size_t>(std::max(n, 1.0));
}

std::mt19937_64 source_rng(std::uint64_t master_seed, std::uint32_t source_id)
{
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32), source_id,
                      std::uint32_t{0x76716c62}};
    return std::mt19937_64(seq);
}

PacketStream generate_onoff_source(const OnOffSpec& spec, double duration, std::mt19937_64& rng,
                                   std::uint32_t source_id)
{
    PacketStream out;
    const double packet_bits = spec.packet_size * 8.0;
    const double spacing = packet_bits / spec.on_rate;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    bool on = unit(rng) < spec.duty_cycle();
    // Bits accumulated towards the next packet; random phase at start.
    double carried_bits = unit(rng) * packet_bits;
    double t = 0.0;

    while (t < duration) {
        const double length = exponential(rng, on ? spec.mean_on : spec.mean_off);
        const double end = t + length;
        if (on) {
            const double first = t + (packet_bits - carried_bits) / spec.on_rate;
            std::size_t emitted = 0;
            for (double when = first; when <= end && when < duration;
                 when = first + static_cast<double>(emitted) * spacing) {
                out.push_back({when, spec.packet_size, source_id});
                ++emitted;
            }
            const double accrued = carried_bits + (end - t) * spec.on_rate -
                                   static_cast<double>(emitted) * packet_bits;
            carried_bits = std::clamp(accrued, 0.0, std::nextafter(packet_bits, 0.0));
        }
        t = end;
        on = !on;
    }
    return out;
}

PacketStream generate_mmpp3_source(const Mmpp3Spec& spec, const std::array<double, 3>& pi,
                                   double duration, std::mt19937_64& rng, std::uint32_t source_id)
{
    PacketStream out;
    std::discrete_distribution<std::size_t> initial({pi[0], pi[1], pi[2]});
    std::size_t state = initial(rng);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double t = 0.0;
    while (t < duration) {
        const double leave = exit_rate(spec, state);
        const double end = std::min(t + exponential(rng, 1.0 / leave), duration);
        const double lambda = spec.state_rates[state];
        for (double when = t + exponential(rng, 1.0 / lambda); when < end;
             when += exponential(rng, 1.0 / lambda)) {
            out.push_back({when, spec.packet_size, source_id});
        }
        t = end;

        // Jump to j != state with probability q_ij / exit rate.
        double pick = unit(rng) * leave;
        std::size_t next = state;
        for (std::size_t j = 0; j < 3; ++j) {
            if (j == state) continue;
            next = j;
            pick -= spec.transition_rates[state][j];
            if (pick < 0.0) break;
        }
        state = next;
    }
    return out;
}

namespace {

void check_duration(double duration)
{
    if (!positive_finite(duration)) {
        throw ConfigError("duration must be positive");
    }
}

}  // namespace

PacketStream generate_onoff(const OnOffSpec& spec, double duration, std::uint64_t seed)
{
    validate(spec);
    check_duration(duration);
    std::vector<PacketStream> per_source;
    per_source.reserve(spec.n_sources);
    for (std::size_t s = 0; s < spec.n_sources; ++s) {
        const auto id = static_cast<std::uint32_t>(s);
        auto rng = source_rng(seed, id);
        per_source.push_back(generate_onoff_source(spec, duration, rng, id));
    }
    return merge_streams(per_source);
}

PacketStream generate_mmpp3(const Mmpp3Spec& spec, double duration, std::uint64_t seed)
{
    const auto pi = mmpp_stationary_distribution(spec);
    check_duration(duration);
    std::vector<PacketStream> per_source;
    per_source.reserve(spec.n_sources);
    for (std::size_t s = 0; s < spec.n_sources; ++s) {
        const auto id = static_cast<std::uint32_t>(s);
        auto rng = source_rng(seed, id);
        per_source.push_back(generate_mmpp3_source(spec, pi, duration, rng, id));
    }
    return merge_streams(per_source);
}

PacketStream generate(const TrafficSpec& spec, double duration, std::uint64_t seed)
{
    if (const auto* onoff = std::get_if<OnOffSpec>(&spec)) {
        return generate_onoff(*onoff, duration, seed);
    }
    return generate_mmpp3(std::get<Mmpp3Spec>(spec), duration, seed);
}

bool is_time_sorted(std::span<const PacketEvent> stream)
{
    return std::is_sorted(stream.begin(), stream.end(),
                          [](const PacketEvent& a, const PacketEvent& b) { return a.time < b.time; });
}

PacketStream merge_streams(std::span<const PacketStream> streams)
{
    std::size_t total = 0;
    for (const auto& s : streams) {
        if (!is_time_sorted(s)) {
            throw InternalError("merge_streams: input stream is not time-sorted");
        }
        total += s.size();
    }

    PacketStream out;
    out.reserve(total);
    if (streams.size() == 1) {
        out = streams.front();
        return out;
    }

    // (time, source_id, stream index, position)
    using Head = std::tuple<double, std::uint32_t, std::size_t, std::size_t>;
    std::priority_queue<Head, std::vector<Head>, std::greater<>> heads;
    for (std::size_t i = 0; i < streams.size(); ++i) {
        if (!streams[i].empty()) {
            heads.emplace(streams[i][0].time, streams[i][0].source_id, i, 0);
        }
    }
    while (!heads.empty()) {
        const auto [time, source, index, pos] = heads.top();
        heads.pop();
        out.push_back(streams[index][pos]);
        if (pos + 1 < streams[index].size()) {
            const auto& next = streams[index][pos + 1];
            heads.emplace(next.time, next.source_id, index, pos + 1);
        }
    }
    return out;
}

}  // namespace vqlab
