#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "vqlab/errors.hpp"
#include "vqlab/mva.hpp"
#include "vqlab/vq_estimator.hpp"

using namespace vqlab;
using namespace vqlab::mva;

namespace {

VarianceCurve make_curve(double delta, std::size_t n, auto&& v_of_t)
{
    VarianceCurve c;
    c.delta = delta;
    for (std::size_t k = 1; k <= n; ++k) c.values.push_back(v_of_t(delta * static_cast<double>(k)));
    return c;
}

// Brute-force scan written independently of dts_search.
std::pair<std::size_t, double> full_scan(const VarianceCurve& c, double q, double c_bps, double r_bps)
{
    std::size_t best = 0;
    double g_best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.values.size(); ++i) {
        const double t = c.delta * static_cast<double>(i + 1);
        const double g = (q + (c_bps - r_bps) / 8.0 * t) / std::sqrt(c.values[i]);
        if (g < g_best) {
            g_best = g;
            best = i + 1;
        }
    }
    return {best, g_best};
}

VarianceCurve random_curve(std::mt19937_64& rng)
{
    // Increasing, roughly power-law v(t) with multiplicative noise.
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double h = 0.5 + 0.45 * U(rng);
    const double scale = std::pow(10.0, 4 + 4 * U(rng));
    const std::size_t n = 50 + rng() % 450;
    VarianceCurve c;
    c.delta = 0.001 * (1 + rng() % 20);
    for (std::size_t k = 1; k <= n; ++k) {
        const double t = c.delta * static_cast<double>(k);
        c.values.push_back(scale * std::pow(t, 2 * h) * (0.8 + 0.4 * U(rng)));
    }
    return c;
}

}  // namespace

TEST(VarianceCurve, ConstantStreamHasZeroVariance)
{
    PacketStream s;
    for (int i = 0; i < 4000; ++i) s.push_back({0.01 * i + 0.005, 100, 0});
    const auto c = measure_variance_curve(s, 0.01, 20, 0.0, 40.0);
    ASSERT_EQ(c.n(), 20u);
    for (double v : c.values) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(dts_search(c, 1000.0, 1e6, 8e4), NoDtsError);
}

TEST(VarianceCurve, IndependentSlotsAddUp)
{
    std::mt19937_64 rng(31);
    std::exponential_distribution<double> gap(1000.0);
    PacketStream s;
    double t = 0;
    while (t < 1000.0) {
        t += gap(rng);
        s.push_back({t, 100, 0});
    }
    // 1e5 slots, so scale 10 still has 1e4 blocks.
    const auto c = measure_variance_curve(s, 0.01, 10, 0.0, 1000.0);
    for (std::size_t k = 1; k <= 10; ++k) {
        EXPECT_NEAR(c.at(k) / (static_cast<double>(k) * c.at(1)), 1.0, 0.1) << "k=" << k;
    }
    // Poisson slot sums: variance = lambda delta size^2.
    EXPECT_NEAR(c.at(1) / (1000.0 * 0.01 * 100.0 * 100.0), 1.0, 0.05);
}

TEST(VarianceCurve, SingleScaleIsSlotSampleVariance)
{
    std::mt19937_64 rng(2);
    PacketStream s;
    double t = 0;
    for (int i = 0; i < 3000; ++i) {
        t += static_cast<double>(rng() % 100) * 1e-4;
        s.push_back({t, 1u + static_cast<std::uint32_t>(rng() % 1000), 0});
    }
    const double delta = 0.05;
    const auto c = measure_variance_curve(s, delta, 1, 0.0, 10.0);
    std::vector<double> slot(200, 0.0);
    for (const auto& p : s)
        if (p.time < 10.0) slot[static_cast<std::size_t>(p.time / delta)] += p.size;
    double mean = 0;
    for (double v : slot) mean += v;
    mean /= slot.size();
    double ss = 0;
    for (double v : slot) ss += (v - mean) * (v - mean);
    ASSERT_EQ(c.n(), 1u);
    EXPECT_NEAR(c.at(1), ss / (slot.size() - 1), 1e-6 * c.at(1));
}

TEST(VarianceCurve, TooShortStreamRejected)
{
    const PacketStream s{{0.0, 10, 0}, {0.5, 10, 0}};
    EXPECT_THROW(measure_variance_curve(s, 0.1, 3, 0.0, 0.5), InsufficientDataError);
    EXPECT_THROW(measure_variance_curve({}, 0.1, 1), InsufficientDataError);
    EXPECT_THROW(measure_variance_curve(s, 0.0, 1, 0.0, 10.0), ConfigError);
}

TEST(GValue, Examples)
{
    EXPECT_EQ(g_value(0.0, 1e6, 1e6, 123.0, 2.0), 0.0);
    EXPECT_DOUBLE_EQ(g_value(100.0, 80.0, 0.0, 400.0, 10.0), 10.0);
    EXPECT_EQ(g_value(1.0, 1e6, 0.0, 0.0, 1.0), std::numeric_limits<double>::infinity());
    EXPECT_THROW(g_value(0.0, 1e6, 1e6, 0.0, 1.0), DegenerateInputError);
    EXPECT_THROW(g_value(0.0, 1e6, 2e6, 0.0, 1.0), DegenerateInputError);
}

TEST(Dts, BrownianClosedForm)
{
    const double q = 10000.0;                 // bytes
    const double c = 2.4e6, r = 1.6e6;        // headroom 1e5 B/s, t* = 0.1 s
    const double sigma2 = 4.0 * q * 1e5 / 9.0;
    const auto curve = make_curve(0.001, 1000, [&](double t) { return sigma2 * t; });
    const double t_star = 8.0 * q / (c - r);
    const double g_star = 2.0 * std::sqrt(q * (c - r) / 8.0) / std::sqrt(sigma2);
    const auto dts = dts_search(curve, q, c, r);
    EXPECT_LE(std::abs(dts.tau - t_star), curve.delta);
    EXPECT_NEAR(g_star, 3.0, 1e-12);
    EXPECT_NEAR(mva_tail(curve, q, c, r) / std::exp(-0.5 * g_star * g_star), 1.0, 0.01);
}

TEST(Dts, QuadraticVarianceHitsBoundary)
{
    const auto curve = make_curve(0.01, 300, [](double t) { return 5e6 * t * t; });
    const auto dts = dts_search(curve, 4000.0, 2e6, 1e6);
    EXPECT_EQ(dts.minimizing_index, 300u);
    EXPECT_DOUBLE_EQ(dts.tau, 3.0);
}

TEST(Dts, SingleScale)
{
    const auto curve = make_curve(0.02, 1, [](double) { return 10.0; });
    const auto dts = dts_search(curve, 1.0, 2.0, 1.0);
    EXPECT_EQ(dts.minimizing_index, 1u);
    EXPECT_EQ(dts.tau, 0.02);
}

TEST(Dts, TiesPickSmallestScale)
{
    // q = 0 and c = r make g = 0 at every scale.
    const auto curve = make_curve(0.01, 50, [](double t) { return 1e4 * t; });
    EXPECT_EQ(dts_search(curve, 0.0, 1e6, 1e6).minimizing_index, 1u);
    EXPECT_EQ(mva_tail(curve, 0.0, 1e6, 1e6), 1.0);
}

TEST(Dts, MatchesFullScan)
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        const auto curve = random_curve(rng);
        const double r = 1e6 * (1 + rng() % 50);
        const double c = r * (1.01 + 0.5 * (rng() % 1000) / 1000.0);
        const double q = static_cast<double>(rng() % 100000);
        const auto dts = dts_search(curve, q, c, r);
        const auto [k, g] = full_scan(curve, q, c, r);
        EXPECT_EQ(dts.minimizing_index, k);
        EXPECT_NEAR(dts.g_star, g, 1e-12 * g);
        EXPECT_DOUBLE_EQ(dts.tau, curve.delta * static_cast<double>(k));
    }
}

TEST(Dts, ArgminInvariantUnderScaling)
{
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const auto curve = random_curve(rng);
        const double r = 1e6 * (1 + rng() % 50);
        const double c = r * (1.05 + 0.5 * (rng() % 1000) / 1000.0);
        const double q = 100.0 + static_cast<double>(rng() % 100000);
        const double alpha = 1.0 + 0.01 * static_cast<double>(rng() % 400);
        const auto p = vq3_params(q, c, r, alpha);
        const auto a = dts_search(curve, q, c, r);
        const auto b = dts_search(curve, p.x_prime, p.c_prime, r);
        EXPECT_EQ(a.minimizing_index, b.minimizing_index);
        EXPECT_NEAR(b.g_star * alpha, a.g_star, 1e-9 * a.g_star);
        for (std::size_t k = 1; k <= curve.n(); k += 17) {
            const double g = g_value(q, c, r, curve.at(k), curve.time(k));
            const double gs = g_value(p.x_prime, p.c_prime, r, curve.at(k), curve.time(k));
            EXPECT_NEAR(gs / g, 1.0 / alpha, 1e-9);
        }
    }
}

TEST(MvaTail, MonotoneInBufferAndRate)
{
    std::mt19937_64 rng(4);
    const auto curve = random_curve(rng);
    const double r = 1e6;
    double prev = 2.0;
    for (double q = 0; q < 50000; q += 1000) {
        const double p = mva_tail(curve, q, 1.3e6, r);
        EXPECT_LE(p, prev);
        prev = p;
    }
    prev = 2.0;
    for (double c = 1.01e6; c < 3e6; c += 5e4) {
        const double p = mva_tail(curve, 5000.0, c, r);
        EXPECT_LE(p, prev);
        prev = p;
    }
}

TEST(MvaTail, FromG)
{
    EXPECT_NEAR(tail_from_g(3.0), 1.1108996538242306e-2, 1e-15);
    EXPECT_EQ(tail_from_g(0.0), 1.0);
    EXPECT_EQ(tail_from_g(-2.0), 1.0);
    EXPECT_GT(tail_from_g(1e3), 0.0);
}

TEST(AssembleLoss, Examples)
{
    EXPECT_DOUBLE_EQ(assemble_loss(0.3, 0.3, 1e-5).value, 1e-5);
    EXPECT_NEAR(assemble_loss(0.02, 0.2, 1e-5).value, 1e-6, 1e-20);
    const auto cl = assemble_loss(0.9, 0.1, 0.5);
    EXPECT_EQ(cl.value, 1.0);
    EXPECT_TRUE(cl.clamped);
    const auto un = assemble_loss(0.0, 0.0, 0.5);
    EXPECT_TRUE(un.undefined_scalar);
    EXPECT_EQ(un.value, 0.0);
    EXPECT_THROW(assemble_loss(1.5, 0.5, 0.5), DomainError);
    EXPECT_THROW(assemble_loss(0.5, 0.5, -0.1), DomainError);
}

TEST(AssembleLoss, LinearInTail)
{
    for (double tail : {1e-9, 1e-6, 1e-3, 0.1}) {
        EXPECT_NEAR(assemble_loss(0.05, 0.4, 2 * tail).value, 2 * assemble_loss(0.05, 0.4, tail).value,
                    1e-15);
    }
}

TEST(VarianceCurve, CsvExport)
{
    const auto curve = make_curve(0.5, 2, [](double t) { return t; });
    std::ostringstream out;
    write_variance_csv(out, curve);
    EXPECT_EQ(out.str(), "k,t_s,v_bytes2\n1,0.5,0.5\n2,1,1\n");
}
