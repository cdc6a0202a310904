#include "vqlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "vqlab/analysis.hpp"
#include "vqlab/errors.hpp"
#include "vqlab/queue_core.hpp"
#include "vqlab/trace_io.hpp"

namespace vqlab::experiment {

using nlohmann::json;

namespace {

const char* tail_mode_name(TailMode mode)
{
    return mode == TailMode::ArrivalEpoch ? "arrival-epoch" : "time-average";
}

TailMode parse_tail_mode(const std::string& name)
{
    if (name == "arrival-epoch") return TailMode::ArrivalEpoch;
    if (name == "time-average") return TailMode::TimeAverage;
    throw ConfigError("vq.tail_mode must be 'arrival-epoch' or 'time-average', got '" + name + "'");
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback)
{
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    return obj.at(key).get<T>();
}

TrafficSpec parse_traffic(const json& t)
{
    const auto model = get_or<std::string>(t, "model", "onoff");
    if (model == "onoff") {
        OnOffSpec s;
        s.n_sources = get_or<std::size_t>(t, "n_sources", s.n_sources);
        s.mean_on = get_or(t, "mean_on", s.mean_on);
        s.mean_off = get_or(t, "mean_off", s.mean_off);
        s.on_rate = get_or(t, "on_rate", s.on_rate);
        s.packet_size = get_or<std::uint32_t>(t, "packet_size", s.packet_size);
        return s;
    }
    if (model == "mmpp3") {
        Mmpp3Spec s;
        s.n_sources = get_or<std::size_t>(t, "n_sources", s.n_sources);
        s.state_rates = get_or(t, "state_rates", s.state_rates);
        s.transition_rates = get_or(t, "transition_rates", s.transition_rates);
        s.packet_size = get_or<std::uint32_t>(t, "packet_size", s.packet_size);
        return s;
    }
    throw ConfigError("traffic.model must be 'onoff' or 'mmpp3', got '" + model + "'");
}

json traffic_json(const TrafficSpec& spec)
{
    if (const auto* s = std::get_if<OnOffSpec>(&spec)) {
        return {{"model", "onoff"},           {"n_sources", s->n_sources}, {"mean_on", s->mean_on},
                {"mean_off", s->mean_off},    {"on_rate", s->on_rate},     {"packet_size", s->packet_size}};
    }
    const auto& s = std::get<Mmpp3Spec>(spec);
    return {{"model", "mmpp3"},
            {"n_sources", s.n_sources},
            {"state_rates", s.state_rates},
            {"transition_rates", s.transition_rates},
            {"packet_size", s.packet_size}};
}

json to_json(const ExperimentConfig& cfg)
{
    json j;
    j["traffic"] = traffic_json(cfg.traffic);
    j["trace"] = cfg.trace ? json(*cfg.trace) : json(nullptr);
    j["service_rate"] = cfg.service_rate;
    j["load"] = cfg.load ? json(*cfg.load) : json(nullptr);
    j["buffer_sweep"] = cfg.buffer_sweep;
    j["vq"] = {{"alphas", cfg.alphas},
               {"rate_update_interval", cfg.vq.rate_update_interval},
               {"window", cfg.vq.window},
               {"tail_mode", tail_mode_name(cfg.vq.tail_mode)}};
    j["warmup"] = cfg.warmup;
    j["duration"] = cfg.duration;
    j["seeds"] = cfg.seeds;
    j["outputs"] = cfg.outputs;
    j["transient"] = {{"step", cfg.transient.step}, {"buffer", cfg.transient.buffer}};
    j["mva"] = {{"delta", cfg.mva.delta}, {"n_scales", cfg.mva.n_scales}};
    j["eta"] = {{"alpha_min", cfg.eta.alpha_min},     {"alpha_max", cfg.eta.alpha_max},
                {"alpha_step", cfg.eta.alpha_step},   {"fig1_tail_ps", cfg.eta.fig1_tail_ps},
                {"tail_min", cfg.eta.tail_min},       {"tail_max", cfg.eta.tail_max},
                {"tail_points", cfg.eta.tail_points}, {"fixed_alphas", cfg.eta.fixed_alphas},
                {"reference_p", cfg.eta.reference_p}};
    return j;
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

VqConfig vq_for(const ExperimentConfig& cfg, double alpha)
{
    VqConfig vq = cfg.vq;
    vq.alpha = alpha;
    vq.nominal_rate = cfg.mean_rate();
    vq.start_time = cfg.warmup;
    vq.window = cfg.duration;
    return vq;
}

}  // namespace

void ExperimentConfig::validate(bool allow_overload) const
{
    vqlab::validate(traffic);
    if (!(service_rate > 0.0)) throw ConfigError("service_rate must be positive");
    if (load && !(*load > 0.0 && *load < 1.0)) {
        throw ConfigError("load must satisfy 0 < rho < 1");
    }
    if (!allow_overload && offered_load() >= 1.0) {
        throw ConfigError("offered load " + fmt(offered_load()) + " is infeasible (rho >= 1)");
    }
    for (double x : buffer_sweep) {
        if (!(x >= 0.0)) throw ConfigError("buffer_sweep entries must be >= 0");
    }
    if (alphas.empty()) throw ConfigError("vq.alphas must not be empty");
    for (double a : alphas) {
        if (!(a >= 1.0)) throw ConfigError("vq.alphas entries must be >= 1");
    }
    if (!(vq.rate_update_interval > 0.0) || !(vq.window >= vq.rate_update_interval)) {
        throw ConfigError("vq.rate_update_interval must be positive and <= vq.window");
    }
    if (!(warmup >= 0.0)) throw ConfigError("warmup must be >= 0");
    if (!(duration > 0.0)) throw ConfigError("duration must be positive");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (!(transient.step > 0.0)) throw ConfigError("transient.step must be positive");
    if (!(transient.buffer >= 0.0)) throw ConfigError("transient.buffer must be >= 0");
    if (!(mva.delta > 0.0) || mva.n_scales == 0) throw ConfigError("mva.delta and mva.n_scales must be positive");
    if (!(eta.alpha_min >= 1.0) || !(eta.alpha_max >= eta.alpha_min) || !(eta.alpha_step > 0.0)) {
        throw ConfigError("eta alpha grid must satisfy 1 <= alpha_min <= alpha_max, step > 0");
    }
    if (!(eta.tail_min > 0.0) || !(eta.tail_max > eta.tail_min) || !(eta.tail_max < analysis::optimal_u()) ||
        eta.tail_points < 2) {
        throw ConfigError("eta tail grid must satisfy 0 < tail_min < tail_max < u*, >= 2 points");
    }
}

double ExperimentConfig::mean_rate() const
{
    return stationary_stats(traffic).mean_rate;
}

double ExperimentConfig::offered_load() const
{
    return mean_rate() / service_rate;
}

ExperimentConfig parse_config(std::string_view json_text)
{
    ExperimentConfig cfg;
    try {
        const json j = json::parse(json_text);
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        if (j.contains("traffic")) cfg.traffic = parse_traffic(j.at("traffic"));
        cfg.trace = j.contains("trace") && !j.at("trace").is_null()
                        ? std::optional<std::string>(j.at("trace").get<std::string>())
                        : std::nullopt;
        cfg.service_rate = get_or(j, "service_rate", cfg.service_rate);
        if (j.contains("load") && !j.at("load").is_null()) cfg.load = j.at("load").get<double>();
        cfg.buffer_sweep = get_or(j, "buffer_sweep", cfg.buffer_sweep);
        if (j.contains("vq")) {
            const auto& v = j.at("vq");
            cfg.alphas = get_or(v, "alphas", cfg.alphas);
            cfg.vq.rate_update_interval = get_or(v, "rate_update_interval", cfg.vq.rate_update_interval);
            cfg.vq.window = get_or(v, "window", cfg.vq.window);
            cfg.vq.tail_mode = parse_tail_mode(get_or<std::string>(v, "tail_mode", "arrival-epoch"));
        }
        cfg.warmup = get_or(j, "warmup", cfg.warmup);
        cfg.duration = get_or(j, "duration", cfg.duration);
        cfg.seeds = get_or(j, "seeds", cfg.seeds);
        cfg.outputs = get_or(j, "outputs", cfg.outputs);
        if (j.contains("transient")) {
            const auto& t = j.at("transient");
            cfg.transient.step = get_or(t, "step", cfg.transient.step);
            cfg.transient.buffer = get_or(t, "buffer", cfg.transient.buffer);
        }
        if (j.contains("mva")) {
            const auto& m = j.at("mva");
            cfg.mva.delta = get_or(m, "delta", cfg.mva.delta);
            cfg.mva.n_scales = get_or(m, "n_scales", cfg.mva.n_scales);
        }
        if (j.contains("eta")) {
            const auto& e = j.at("eta");
            cfg.eta.alpha_min = get_or(e, "alpha_min", cfg.eta.alpha_min);
            cfg.eta.alpha_max = get_or(e, "alpha_max", cfg.eta.alpha_max);
            cfg.eta.alpha_step = get_or(e, "alpha_step", cfg.eta.alpha_step);
            cfg.eta.fig1_tail_ps = get_or(e, "fig1_tail_ps", cfg.eta.fig1_tail_ps);
            cfg.eta.tail_min = get_or(e, "tail_min", cfg.eta.tail_min);
            cfg.eta.tail_max = get_or(e, "tail_max", cfg.eta.tail_max);
            cfg.eta.tail_points = get_or(e, "tail_points", cfg.eta.tail_points);
            cfg.eta.fixed_alphas = get_or(e, "fixed_alphas", cfg.eta.fixed_alphas);
            cfg.eta.reference_p = get_or(e, "reference_p", cfg.eta.reference_p);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (cfg.load) {
        validate(cfg.traffic);
        cfg.traffic = with_source_count(cfg.traffic, sources_for_load(cfg.traffic, cfg.service_rate, *cfg.load));
    }
    cfg.validate(/*allow_overload=*/true);
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string effective_config_json(const ExperimentConfig& cfg)
{
    return to_json(cfg).dump(2);
}

std::string config_hash(const ExperimentConfig& cfg)
{
    // The output location does not affect results, so it is left out.
    auto j = to_json(cfg);
    j.erase("outputs");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

PacketStream make_stream(const ExperimentConfig& cfg, std::uint64_t seed)
{
    if (cfg.trace) return read_trace_file(*cfg.trace);
    return generate(cfg.traffic, cfg.warmup + cfg.duration, seed);
}

std::vector<SteadyRow> run_steady(const ExperimentConfig& cfg)
{
    cfg.validate();
    const double c = cfg.service_rate;
    const double end = cfg.warmup + cfg.duration;
    std::vector<SteadyRow> rows;
    for (const auto seed : cfg.seeds) {
        const auto stream = make_stream(cfg, seed);
        for (const double x : cfg.buffer_sweep) {
            const auto direct = simulate_finite_fifo(stream, QueueParams{c, x}, cfg.warmup);
            for (const double alpha : cfg.alphas) {
                const auto estimates = run_online(stream, x, c, vq_for(cfg, alpha), end);
                const LossEstimate est = estimates.empty() ? LossEstimate{} : estimates.front();
                SteadyRow row;
                row.x_bytes = x;
                row.direct_loss = direct.byte_loss_ratio();
                row.direct_lost_packets = direct.lost_packets;
                row.vq_estimate = est.value;
                row.alpha = alpha;
                row.pl0 = est.pl0;
                row.p0 = est.p0;
                row.u = est.u;
                row.flags = est.flags;
                row.seed = seed;
                rows.push_back(row);
            }
        }
    }
    return rows;
}

std::vector<TransientSeries> run_transient(const ExperimentConfig& cfg)
{
    cfg.validate(/*allow_overload=*/true);
    const double c = cfg.service_rate;
    const double x = cfg.transient.buffer;
    const double alpha = cfg.alphas.front();
    const auto n_steps = static_cast<std::size_t>(std::floor(cfg.duration / cfg.transient.step + 1e-9));

    std::vector<TransientSeries> out;
    for (const auto seed : cfg.seeds) {
        const auto stream = make_stream(cfg, seed);
        OnlineEstimator est(x, c, vq_for(cfg, alpha));
        FiniteFifo fifo(QueueParams{c, x}, 0.0);
        TransientSeries series;
        series.seed = seed;
        bool measuring = false;
        std::size_t k = 1;
        const auto report_time = [&](std::size_t i) {
            return cfg.warmup + static_cast<double>(i) * cfg.transient.step;
        };
        const auto report = [&](double t) {
            if (!measuring) {
                fifo.start_measurement(cfg.warmup);
                measuring = true;
            }
            const auto snap = est.snapshot(t);
            TransientRow row;
            row.t_s = t - cfg.warmup;
            row.vq_estimate = snap.value;
            row.direct_cumulative_loss = fifo.tallies().byte_loss_ratio();
            row.flags = snap.flags;
            if (!series.first_nonzero_estimate && snap.value > 0.0) {
                series.first_nonzero_estimate = row.t_s;
            }
            series.rows.push_back(row);
        };

        for (const auto& pkt : stream) {
            while (k <= n_steps && pkt.time >= report_time(k)) {
                report(report_time(k));
                ++k;
            }
            if (k > n_steps) break;
            if (!measuring && pkt.time >= cfg.warmup) {
                fifo.start_measurement(cfg.warmup);
                measuring = true;
            }
            est.feed(pkt);
            fifo.offer(pkt);
        }
        for (; k <= n_steps; ++k) report(report_time(k));

        if (const auto& first = fifo.tallies().first_loss_time) {
            series.first_direct_loss = *first - cfg.warmup;
        }
        out.push_back(std::move(series));
    }
    return out;
}

EtaCurves run_eta_curves(const ExperimentConfig& cfg)
{
    cfg.validate(/*allow_overload=*/true);
    const auto& e = cfg.eta;
    EtaCurves curves;

    const auto n_alpha = static_cast<std::size_t>(std::floor((e.alpha_max - e.alpha_min) / e.alpha_step + 1e-9));
    for (const double p : e.fig1_tail_ps) {
        for (std::size_t i = 0; i <= n_alpha; ++i) {
            const double alpha = e.alpha_min + static_cast<double>(i) * e.alpha_step;
            curves.fig1.push_back({alpha, p, analysis::eta_of_alpha(alpha, p)});
        }
    }

    std::vector<double> tails(e.tail_points);
    const double lo = std::log10(e.tail_min);
    const double hi = std::log10(e.tail_max);
    for (std::size_t i = 0; i < e.tail_points; ++i) {
        tails[i] = std::pow(10.0, lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(e.tail_points - 1));
    }
    for (const double p : tails) {
        curves.fig2.push_back({p, analysis::eta_min(p), analysis::phi(p, e.reference_p)});
    }
    for (const double alpha : e.fixed_alphas) {
        for (const double p : tails) {
            curves.fig3.push_back({p, alpha, analysis::eta_of_alpha(alpha, p) / analysis::eta_min(p)});
        }
    }
    return curves;
}

MvaOracleResult run_mva_oracle(const ExperimentConfig& cfg)
{
    cfg.validate();
    const double c = cfg.service_rate;
    const double r = cfg.mean_rate();
    const double end = cfg.warmup + cfg.duration;
    MvaOracleResult result;
    for (const auto seed : cfg.seeds) {
        const auto stream = make_stream(cfg, seed);
        auto curve = mva::measure_variance_curve(stream, cfg.mva.delta, cfg.mva.n_scales, cfg.warmup, end);

        // The scalar P_L(0)/P{Q>0} from VQ1/VQ2, which do not depend on x or alpha.
        VqConfig vq = vq_for(cfg, 1.0);
        const auto scalar_est = run_online(stream, 0.0, c, vq, end);
        const double pl0 = scalar_est.empty() ? 0.0 : scalar_est.front().pl0;
        const double p0 = scalar_est.empty() ? 0.0 : scalar_est.front().p0;

        for (const double x : cfg.buffer_sweep) {
            const auto dts = mva::dts_search(curve, x, c, r);
            MvaRow row;
            row.x_bytes = x;
            row.tau_s = dts.tau;
            row.g_star = dts.g_star;
            row.dts_index = dts.minimizing_index;
            row.mva_tail = mva::tail_from_g(dts.g_star);
            const auto loss = mva::assemble_loss(pl0, p0, row.mva_tail);
            row.mva_loss = loss.value;
            row.undefined_scalar = loss.undefined_scalar;
            const auto direct = simulate_finite_fifo(stream, QueueParams{c, x}, cfg.warmup);
            row.direct_loss = direct.byte_loss_ratio();
            row.direct_lost_packets = direct.lost_packets;
            for (const double alpha : cfg.alphas) {
                const auto scaled = vq3_params(x, c, r, alpha);
                const auto scaled_dts = mva::dts_search(curve, scaled.x_prime, scaled.c_prime, r);
                row.scaled_index_match = row.scaled_index_match &&
                                         scaled_dts.minimizing_index == dts.minimizing_index;
            }
            row.seed = seed;
            result.rows.push_back(row);
        }
        result.curves.emplace_back(seed, std::move(curve));
    }
    return result;
}

void write_steady_csv(std::ostream& out, const std::vector<SteadyRow>& rows, const std::string& hash)
{
    out << "x_bytes,direct_loss,vq_estimate,alpha,seed,direct_lost_packets,pl0,p0,u,flags,config_hash\n";
    for (const auto& r : rows) {
        out << fmt(r.x_bytes) << ',' << fmt(r.direct_loss) << ',' << fmt(r.vq_estimate) << ','
            << fmt(r.alpha) << ',' << r.seed << ',' << r.direct_lost_packets << ',' << fmt(r.pl0) << ','
            << fmt(r.p0) << ',' << fmt(r.u) << ',' << r.flags.to_string() << ',' << hash << '\n';
    }
}

void write_transient_csv(std::ostream& out, const std::vector<TransientSeries>& series,
                         const std::string& hash)
{
    out << "t_s,vq_estimate,direct_cumulative_loss,first_direct_loss_time,flags,seed,config_hash\n";
    for (const auto& s : series) {
        // -1 when the direct counter never lost a packet during the run.
        const std::string first = s.first_direct_loss ? fmt(*s.first_direct_loss) : "-1";
        for (const auto& r : s.rows) {
            out << fmt(r.t_s) << ',' << fmt(r.vq_estimate) << ',' << fmt(r.direct_cumulative_loss) << ','
                << first << ',' << r.flags.to_string() << ',' << s.seed << ',' << hash << '\n';
        }
    }
}

void write_fig1_csv(std::ostream& out, const EtaCurves& curves, const std::string& hash)
{
    out << "alpha,tail_p,eta,seed,config_hash\n";
    for (const auto& r : curves.fig1) {
        out << fmt(r.alpha) << ',' << fmt(r.tail_p) << ',' << fmt(r.eta) << ",0," << hash << '\n';
    }
}

void write_fig2_csv(std::ostream& out, const EtaCurves& curves, const std::string& hash)
{
    out << "tail_p,eta_min,phi,seed,config_hash\n";
    for (const auto& r : curves.fig2) {
        out << fmt(r.tail_p) << ',' << fmt(r.eta_min) << ',' << fmt(r.phi) << ",0," << hash << '\n';
    }
}

void write_fig3_csv(std::ostream& out, const EtaCurves& curves, const std::string& hash)
{
    out << "tail_p,alpha_fixed,eta_over_eta_min,seed,config_hash\n";
    for (const auto& r : curves.fig3) {
        out << fmt(r.tail_p) << ',' << fmt(r.alpha_fixed) << ',' << fmt(r.eta_over_eta_min) << ",0,"
            << hash << '\n';
    }
}

void write_mva_csv(std::ostream& out, const std::vector<MvaRow>& rows, const std::string& hash)
{
    out << "x_bytes,tau_s,g_star,mva_tail,mva_loss,direct_loss,direct_lost_packets,dts_index,"
           "scaled_index_match,seed,config_hash\n";
    for (const auto& r : rows) {
        out << fmt(r.x_bytes) << ',' << fmt(r.tau_s) << ',' << fmt(r.g_star) << ',' << fmt(r.mva_tail)
            << ',' << fmt(r.mva_loss) << ',' << fmt(r.direct_loss) << ',' << r.direct_lost_packets << ','
            << r.dts_index << ',' << (r.scaled_index_match ? 1 : 0) << ',' << r.seed << ',' << hash
            << '\n';
    }
}

}  // namespace vqlab::experiment
