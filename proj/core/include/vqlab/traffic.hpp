#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

namespace vqlab {

struct PacketEvent {
    double time = 0.0;            // seconds
    std::uint32_t size = 0;       // bytes
    std::uint32_t source_id = 0;

    friend bool operator==(const PacketEvent&, const PacketEvent&) = default;
};

using PacketStream = std::vector<PacketEvent>;

// Homogeneous exponential on-off sources emitting constant-size packets at
// a constant bit rate while on. Defaults are the audio (Type A) model.
struct OnOffSpec {
    std::size_t n_sources = 1;
    double mean_on = 0.2;          // s
    double mean_off = 0.6;         // s
    double on_rate = 64e3;         // bits/s
    std::uint32_t packet_size = 500;

    double duty_cycle() const { return mean_on / (mean_on + mean_off); }
};

// Independent 3-state MMPP flows. transition_rates[i][j] is q_ij; the
// diagonal is ignored. Defaults are the video (Type B) model.
struct Mmpp3Spec {
    std::size_t n_sources = 1;
    std::array<double, 3> state_rates{83.0, 367.0, 661.0};   // packets/s
    std::array<std::array<double, 3>, 3> transition_rates{{
        {0.0, 40.0, 1.0},
        {10.0, 0.0, 1.3},
        {6.0, 0.1, 0.0},
    }};
    std::uint32_t packet_size = 188;
};

using TrafficSpec = std::variant<OnOffSpec, Mmpp3Spec>;

struct StationaryStats {
    double mean_rate = 0.0;                    // bits/s, aggregate
    std::vector<double> state_distribution;    // MMPP only
    std::optional<double> duty_cycle;          // on-off only
};

void validate(const OnOffSpec& spec);
void validate(const Mmpp3Spec& spec);
void validate(const TrafficSpec& spec);

// Solves pi Q = 0, sum(pi) = 1. Throws ConfigError when the chain is reducible.
std::array<double, 3> mmpp_stationary_distribution(const Mmpp3Spec& spec);

// Infinity norm of pi Q, the global-balance residual.
double balance_residual(const Mmpp3Spec& spec, const std::array<double, 3>& pi);

StationaryStats stationary_stats(const TrafficSpec& spec);

// Mean rate of a single source (bits/s).
double per_source_rate(const TrafficSpec& spec);

std::size_t source_count(const TrafficSpec& spec);
TrafficSpec with_source_count(TrafficSpec spec, std::size_t n_sources);

// Number of sources giving an offered load closest to `load` on a link of
// `service_rate` bits/s. Throws ConfigError unless 0 < load < 1.
std::size_t sources_for_load(const TrafficSpec& spec, double service_rate, double load);

// Per-source generator. The engine is seeded through std::seed_seq with
// {lo32(master), hi32(master), source_id, 0x76716c62}, so each source's
// stream depends only on (master_seed, source_id).
std::mt19937_64 source_rng(std::uint64_t master_seed, std::uint32_t source_id);

// Events in [0, duration), sorted by (time, source_id).
PacketStream generate_onoff(const OnOffSpec& spec, double duration, std::uint64_t seed);
PacketStream generate_mmpp3(const Mmpp3Spec& spec, double duration, std::uint64_t seed);
PacketStream generate(const TrafficSpec& spec, double duration, std::uint64_t seed);

// Single-source building blocks used by the generators above.
PacketStream generate_onoff_source(const OnOffSpec& spec, double duration, std::mt19937_64& rng,
                                   std::uint32_t source_id);
PacketStream generate_mmpp3_source(const Mmpp3Spec& spec, const std::array<double, 3>& pi,
                                   double duration, std::mt19937_64& rng, std::uint32_t source_id);

// k-way merge of individually sorted streams. Ties are ordered by source_id,
// then by input stream index, then by position. Throws InternalError when an
// input is not sorted by time.
PacketStream merge_streams(std::span<const PacketStream> streams);

bool is_time_sorted(std::span<const PacketEvent> stream);

}  // namespace vqlab
