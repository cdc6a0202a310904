#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vqlab/mva.hpp"
#include "vqlab/traffic.hpp"
#include "vqlab/vq_estimator.hpp"

// Experiment runner behind the `vqlab` command-line tool. Configs are JSON
// documents (see docs/config.md); every run replays one generated stream per
// (config, seed) through the direct simulation, the VQ bank and the MVA oracle.

namespace vqlab::experiment {

struct TransientSettings {
    double step = 0.02;          // s, report interval of the growing window
    double buffer = 0.0;         // bytes
};

struct MvaSettings {
    double delta = 0.01;         // s
    std::size_t n_scales = 500;
};

struct EtaSettings {
    double alpha_min = 1.0;
    double alpha_max = 5.0;
    double alpha_step = 0.05;
    std::vector<double> fig1_tail_ps{1e-4, 1e-6, 1e-8};
    double tail_min = 1e-10;     // log-spaced sweeps for the eta_min / fixed-alpha datasets
    double tail_max = 1e-1;
    std::size_t tail_points = 91;
    std::vector<double> fixed_alphas{1.5, 2.5, 3.5};
    double reference_p = 0.01;
};

struct ExperimentConfig {
    TrafficSpec traffic = OnOffSpec{};
    std::optional<std::string> trace;            // replay this trace instead of generating
    double service_rate = 2e6;                   // bits/s
    std::optional<double> load;                  // sets n_sources when given
    std::vector<double> buffer_sweep;            // bytes
    std::vector<double> alphas{2.5};
    VqConfig vq;                                 // alpha/nominal/start/window filled per run
    double warmup = 100.0;
    double duration = 2000.0;
    std::vector<std::uint64_t> seeds{1};
    std::string outputs = "out";
    TransientSettings transient;
    MvaSettings mva;
    EtaSettings eta;

    // Throws ConfigError. `allow_overload` skips the rho < 1 check.
    void validate(bool allow_overload = false) const;

    // Aggregate mean input rate (bits/s) and load.
    double mean_rate() const;
    double offered_load() const;
};

// Parses a JSON document. Missing fields take the documented defaults; when
// "load" is present n_sources is derived from it. The result is validated
// except for the rho < 1 check, which is left to each run. Throws ConfigError.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config_file(const std::string& path);

// Canonical JSON of the effective configuration (every field explicit).
std::string effective_config_json(const ExperimentConfig& cfg);

// FNV-1a 64 of the compact effective config minus "outputs", as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

// Stream for one seed: the trace when configured, else generated over
// [0, warmup + duration).
PacketStream make_stream(const ExperimentConfig& cfg, std::uint64_t seed);

struct SteadyRow {
    double x_bytes = 0.0;
    double direct_loss = 0.0;
    std::uint64_t direct_lost_packets = 0;
    double vq_estimate = 0.0;
    double alpha = 1.0;
    double pl0 = 0.0;
    double p0 = 0.0;
    double u = 0.0;
    EstimateFlags flags;
    std::uint64_t seed = 0;
};

// Per seed and swept x: direct finite-FIFO loss after warm-up and the VQ
// estimate over one window covering the whole measured duration.
std::vector<SteadyRow> run_steady(const ExperimentConfig& cfg);

struct TransientRow {
    double t_s = 0.0;                  // elapsed since the end of warm-up
    double vq_estimate = 0.0;
    double direct_cumulative_loss = 0.0;
    EstimateFlags flags;
};

struct TransientSeries {
    std::uint64_t seed = 0;
    std::vector<TransientRow> rows;
    std::optional<double> first_direct_loss;   // elapsed seconds
    std::optional<double> first_nonzero_estimate;
};

// Growing window from the end of warm-up, reported every transient.step
// seconds, for buffer transient.buffer and alphas[0].
std::vector<TransientSeries> run_transient(const ExperimentConfig& cfg);

struct Fig1Row {
    double alpha, tail_p, eta;
};
struct Fig2Row {
    double tail_p, eta_min, phi;
};
struct Fig3Row {
    double tail_p, alpha_fixed, eta_over_eta_min;
};

struct EtaCurves {
    std::vector<Fig1Row> fig1;   // eta versus alpha at fixed tail levels
    std::vector<Fig2Row> fig2;   // eta_min and phi versus tail level
    std::vector<Fig3Row> fig3;   // eta / eta_min at fixed alphas
};

EtaCurves run_eta_curves(const ExperimentConfig& cfg);

struct MvaRow {
    double x_bytes = 0.0;
    double tau_s = 0.0;
    double g_star = 0.0;
    double mva_tail = 0.0;
    double mva_loss = 0.0;
    double direct_loss = 0.0;
    std::uint64_t direct_lost_packets = 0;
    std::size_t dts_index = 0;
    bool scaled_index_match = true;   // same DTS index at (x'/c') for every alpha
    bool undefined_scalar = false;
    std::uint64_t seed = 0;
};

struct MvaOracleResult {
    std::vector<MvaRow> rows;
    std::vector<std::pair<std::uint64_t, mva::VarianceCurve>> curves;   // per seed
};

// Variance curve over the measured span, DTS search and tail/loss assembly
// per swept x, with the P_L(0)/P{Q>0} scalar taken from VQ1/VQ2 on the same
// stream. Throws InsufficientDataError / NoDtsError.
MvaOracleResult run_mva_oracle(const ExperimentConfig& cfg);

// CSV writers; each row ends with seed and config hash columns.
void write_steady_csv(std::ostream& out, const std::vector<SteadyRow>& rows, const std::string& hash);
void write_transient_csv(std::ostream& out, const std::vector<TransientSeries>& series,
                         const std::string& hash);
void write_fig1_csv(std::ostream& out, const EtaCurves& curves, const std::string& hash);
void write_fig2_csv(std::ostream& out, const EtaCurves& curves, const std::string& hash);
void write_fig3_csv(std::ostream& out, const EtaCurves& curves, const std::string& hash);
void write_mva_csv(std::ostream& out, const std::vector<MvaRow>& rows, const std::string& hash);

}  // namespace vqlab::experiment
