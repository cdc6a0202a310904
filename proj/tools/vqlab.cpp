// vqlab: experiment runner for the virtual-queue loss estimator.
//
//   vqlab steady     --config cfg.json [--seed N] [--out DIR]
//   vqlab transient  --config cfg.json [--seed N] [--out DIR]
//   vqlab eta        --config cfg.json [--out DIR]
//   vqlab mva-oracle --config cfg.json [--seed N] [--out DIR]
//   vqlab online     --config cfg.json [--seed N] [--out DIR]
//   vqlab trace      --config cfg.json [--seed N] [--out DIR]
//
// Exit codes: 0 success, 1 configuration error, 2 runtime/statistical error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vqlab/errors.hpp"
#include "vqlab/experiment.hpp"
#include "vqlab/mva.hpp"
#include "vqlab/trace_io.hpp"
#include "vqlab/vq_estimator.hpp"

namespace fs = std::filesystem;
namespace ex = vqlab::experiment;

namespace {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

std::ofstream open_output(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw vqlab::ConfigError("cannot write " + path.string());
    return out;
}

// Loads the config, applies overrides, creates the output dir and writes the
// effective config sidecar.
ex::ExperimentConfig prepare(const Options& opt, const std::string& command, fs::path& out_dir)
{
    auto cfg = ex::load_config_file(opt.config_path);
    if (opt.seed) cfg.seeds = {*opt.seed};
    if (opt.out_dir) cfg.outputs = *opt.out_dir;
    out_dir = cfg.outputs;
    fs::create_directories(out_dir);
    auto sidecar = open_output(out_dir / (command + ".config.json"));
    sidecar << ex::effective_config_json(cfg) << '\n';
    return cfg;
}

void run_steady(const Options& opt)
{
    fs::path dir;
    const auto cfg = prepare(opt, "steady", dir);
    const auto rows = ex::run_steady(cfg);
    auto out = open_output(dir / "steady.csv");
    ex::write_steady_csv(out, rows, ex::config_hash(cfg));
}

void run_transient(const Options& opt)
{
    fs::path dir;
    const auto cfg = prepare(opt, "transient", dir);
    const auto series = ex::run_transient(cfg);
    auto out = open_output(dir / "transient.csv");
    ex::write_transient_csv(out, series, ex::config_hash(cfg));
    for (const auto& s : series) {
        std::printf("seed %llu: first nonzero estimate at %s s, first direct loss at %s s\n",
                    static_cast<unsigned long long>(s.seed),
                    s.first_nonzero_estimate ? std::to_string(*s.first_nonzero_estimate).c_str() : "never",
                    s.first_direct_loss ? std::to_string(*s.first_direct_loss).c_str() : "never");
    }
}

void run_eta(const Options& opt)
{
    fs::path dir;
    const auto cfg = prepare(opt, "eta", dir);
    const auto curves = ex::run_eta_curves(cfg);
    const auto hash = ex::config_hash(cfg);
    auto f1 = open_output(dir / "eta_vs_alpha.csv");
    ex::write_fig1_csv(f1, curves, hash);
    auto f2 = open_output(dir / "eta_min_phi.csv");
    ex::write_fig2_csv(f2, curves, hash);
    auto f3 = open_output(dir / "eta_fixed_alpha.csv");
    ex::write_fig3_csv(f3, curves, hash);
}

void run_mva(const Options& opt)
{
    fs::path dir;
    const auto cfg = prepare(opt, "mva-oracle", dir);
    const auto result = ex::run_mva_oracle(cfg);
    auto out = open_output(dir / "mva_oracle.csv");
    ex::write_mva_csv(out, result.rows, ex::config_hash(cfg));
    for (const auto& [seed, curve] : result.curves) {
        auto vc = open_output(dir / ("variance_seed" + std::to_string(seed) + ".csv"));
        vqlab::mva::write_variance_csv(vc, curve);
    }
}

void run_online_series(const Options& opt)
{
    fs::path dir;
    const auto cfg = prepare(opt, "online", dir);
    if (cfg.buffer_sweep.empty()) throw vqlab::ConfigError("online: buffer_sweep must not be empty");
    cfg.validate(/*allow_overload=*/true);
    for (const auto seed : cfg.seeds) {
        const auto stream = ex::make_stream(cfg, seed);
        vqlab::VqConfig vq = cfg.vq;
        vq.alpha = cfg.alphas.front();
        vq.nominal_rate = cfg.mean_rate();
        vq.start_time = cfg.warmup;
        const auto estimates = vqlab::run_online(stream, cfg.buffer_sweep.front(), cfg.service_rate, vq,
                                                 cfg.warmup + cfg.duration);
        auto out = open_output(dir / ("estimates_seed" + std::to_string(seed) + ".csv"));
        vqlab::write_estimates_csv(out, estimates);
    }
}

void run_trace_export(const Options& opt)
{
    fs::path dir;
    const auto cfg = prepare(opt, "trace", dir);
    for (const auto seed : cfg.seeds) {
        vqlab::write_trace_file((dir / ("trace_seed" + std::to_string(seed) + ".csv")).string(),
                                ex::make_stream(cfg, seed));
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Virtual-queue loss estimation laboratory"};
    app.require_subcommand(1);

    Options opt;
    std::function<void(const Options&)> action;
    const auto add = [&](const char* name, const char* help, void (*fn)(const Options&)) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config_path, "JSON experiment config")->required();
        sub->add_option("--seed", opt.seed, "Run a single seed (overrides config seeds)");
        sub->add_option("--out", opt.out_dir, "Output directory (overrides config outputs)");
        sub->callback([&action, fn] { action = fn; });
    };
    add("steady", "Direct loss vs VQ estimate over a buffer sweep", run_steady);
    add("transient", "Growing-window estimate vs direct loss counter", run_transient);
    add("eta", "Variance-reduction model curves", run_eta);
    add("mva-oracle", "Offline MVA analysis per buffer size", run_mva);
    add("online", "Consecutive-window estimate series", run_online_series);
    add("trace", "Export the generated traffic as a trace", run_trace_export);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        action(opt);
    } catch (const vqlab::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 1;
    } catch (const vqlab::StatisticalError& e) {
        std::cerr << "statistical error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
