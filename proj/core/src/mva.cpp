#include "vqlab/mva.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "vqlab/errors.hpp"
#include "vqlab/units.hpp"

namespace vqlab::mva {

void VarianceCurve::validate() const
{
    if (!(delta > 0.0)) throw ConfigError("variance curve: delta must be positive");
    if (values.empty()) throw ConfigError("variance curve: needs at least one scale");
    for (double v : values) {
        if (!(v >= 0.0)) throw ConfigError("variance curve: negative or NaN variance");
    }
}

VarianceCurve measure_variance_curve(std::span<const PacketEvent> stream, double delta,
                                     std::size_t n, double start, std::optional<double> end)
{
    if (!(delta > 0.0)) throw ConfigError("measure_variance_curve: delta must be positive");
    if (n == 0) throw ConfigError("measure_variance_curve: n must be >= 1");
    if (!is_time_sorted(stream)) throw InternalError("measure_variance_curve: stream not sorted");

    const double stop = end.value_or(stream.empty() ? start : stream.back().time);
    const double span_s = stop - start;
    const auto slots = span_s > 0.0 ? static_cast<std::size_t>(std::floor(span_s / delta)) : 0;
    if (slots / n < 2) {
        throw InsufficientDataError("measure_variance_curve: " + std::to_string(slots) +
                                    " slots give fewer than 2 blocks at scale " +
                                    std::to_string(n));
    }

    std::vector<double> bytes(slots, 0.0);
    for (const auto& pkt : stream) {
        if (pkt.time < start) continue;
        const auto slot = static_cast<std::size_t>(std::floor((pkt.time - start) / delta));
        if (slot >= slots) break;
        bytes[slot] += pkt.size;
    }
    std::vector<double> prefix(slots + 1, 0.0);
    for (std::size_t i = 0; i < slots; ++i) prefix[i + 1] = prefix[i] + bytes[i];

    VarianceCurve curve;
    curve.delta = delta;
    curve.values.resize(n);
    for (std::size_t k = 1; k <= n; ++k) {
        const std::size_t blocks = slots / k;
        // Two-pass sample variance of block sums.
        long double mean = 0.0L;
        for (std::size_t b = 0; b < blocks; ++b) mean += prefix[(b + 1) * k] - prefix[b * k];
        mean /= static_cast<long double>(blocks);
        long double ss = 0.0L;
        for (std::size_t b = 0; b < blocks; ++b) {
            const long double d = (prefix[(b + 1) * k] - prefix[b * k]) - mean;
            ss += d * d;
        }
        curve.values[k - 1] = static_cast<double>(ss / static_cast<long double>(blocks - 1));
    }
    return curve;
}

double g_value(double q, double c, double r, double v_t, double t)
{
    if (!(v_t >= 0.0)) throw DomainError("g_value: variance must be >= 0");
    const double numerator = q + to_bytes_per_second(c - r) * t;
    if (v_t == 0.0) {
        if (numerator > 0.0) return std::numeric_limits<double>::infinity();
        throw DegenerateInputError("g_value: zero variance with non-positive headroom");
    }
    return numerator / std::sqrt(v_t);
}

DtsResult dts_search(const VarianceCurve& curve, double q, double c, double r)
{
    curve.validate();
    DtsResult best;
    best.g_star = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= curve.n(); ++k) {
        const double g = g_value(q, c, r, curve.at(k), curve.time(k));
        if (g < best.g_star) {
            best.g_star = g;
            best.minimizing_index = k;
        }
    }
    if (best.minimizing_index == 0) {
        throw NoDtsError("dts_search: g is infinite at every time scale (zero variance curve)");
    }
    best.tau = curve.time(best.minimizing_index);
    return best;
}

double tail_from_g(double g_star)
{
    if (!(g_star > 0.0)) return 1.0;
    const double tail = std::exp(-0.5 * g_star * g_star);
    return std::max(tail, std::numeric_limits<double>::denorm_min());
}

double mva_tail(const VarianceCurve& curve, double q, double c, double r)
{
    return tail_from_g(dts_search(curve, q, c, r).g_star);
}

LossAssembly assemble_loss(double pl0, double p0, double tail)
{
    const auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!in_unit(pl0) || !in_unit(p0) || !in_unit(tail)) {
        throw DomainError("assemble_loss: probabilities must lie in [0, 1]");
    }
    LossAssembly out;
    if (p0 == 0.0) {
        out.undefined_scalar = true;
        return out;
    }
    const double value = (pl0 / p0) * tail;
    out.clamped = value > 1.0;
    out.value = std::min(value, 1.0);
    return out;
}

void write_variance_csv(std::ostream& out, const VarianceCurve& curve)
{
    out << "k,t_s,v_bytes2\n";
    char buf[96];
    for (std::size_t k = 1; k <= curve.n(); ++k) {
        const int len = std::snprintf(buf, sizeof buf, "%zu,%.9g,%.17g\n", k, curve.time(k),
                                      curve.at(k));
        out.write(buf, len);
    }
}

}  // namespace vqlab::mva
