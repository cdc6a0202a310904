#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "vqlab/traffic.hpp"

namespace vqlab::mva {

// v(t) = VAR[A(t)] in bytes^2 on the grid t = k * delta, k = 1..n.
struct VarianceCurve {
    double delta = 0.0;
    std::vector<double> values;   // values[k - 1] = v(k * delta)

    std::size_t n() const { return values.size(); }
    double time(std::size_t k) const { return static_cast<double>(k) * delta; }
    double at(std::size_t k) const { return values.at(k - 1); }

    void validate() const;
};

struct DtsResult {
    double tau = 0.0;                 // seconds
    double g_star = 0.0;
    std::size_t minimizing_index = 0; // k, 1-based
};

// Bins arrivals into slots of `delta` seconds over [start, end) and, for each
// scale k, takes the sample variance of byte sums over non-overlapping blocks
// of k consecutive slots. `end` defaults to the last arrival time. Throws
// InsufficientDataError when fewer than two blocks fit at scale n.
VarianceCurve measure_variance_curve(std::span<const PacketEvent> stream, double delta,
                                     std::size_t n, double start = 0.0,
                                     std::optional<double> end = std::nullopt);

// g = (q + (c - r) t / 8) / sqrt(v_t) with q, v_t in bytes / bytes^2 and
// c, r in bits/s. Returns +inf when v_t = 0 and the numerator is positive;
// throws DegenerateInputError when v_t = 0 and the numerator is <= 0.
double g_value(double q, double c, double r, double v_t, double t);

// Exhaustive scan over the grid; the smallest k wins ties. Throws NoDtsError
// when g is +inf at every scale.
DtsResult dts_search(const VarianceCurve& curve, double q, double c, double r);

// exp(-g*^2 / 2), clamped to (0, 1]. A non-positive g* (c <= r) gives 1.
double mva_tail(const VarianceCurve& curve, double q, double c, double r);
double tail_from_g(double g_star);

struct LossAssembly {
    double value = 0.0;
    bool undefined_scalar = false;   // p0 == 0
    bool clamped = false;            // (pl0 / p0) * tail exceeded 1
};

// (pl0 / p0) * tail clamped to [0, 1]. Throws DomainError for inputs outside [0, 1].
LossAssembly assemble_loss(double pl0, double p0, double tail);

// `k,t_s,v_bytes2` with a header row.
void write_variance_csv(std::ostream& out, const VarianceCurve& curve);

}  // namespace vqlab::mva
