#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "vqlab/analysis.hpp"
#include "vqlab/errors.hpp"
#include "vqlab/vq_estimator.hpp"

using namespace vqlab;
using namespace vqlab::analysis;

namespace {

// Direct evaluation with powl, no log-space rewriting.
long double eta_direct(long double a, long double p)
{
    return a * a * a * a * (std::pow(p, 1.0L - 1.0L / (a * a)) - p) / (1.0L - p);
}

double sample_variance(const std::vector<double>& xs)
{
    double m = 0;
    for (double x : xs) m += x;
    m /= xs.size();
    double ss = 0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / (xs.size() - 1);
}

}  // namespace

TEST(Eta, NoScalingIsUnity)
{
    for (double p : {0.5, 1e-2, 1e-4, 1e-6, 1e-8, 1e-15}) EXPECT_NEAR(eta_of_alpha(1.0, p), 1.0, 1e-12);
}

TEST(Eta, KnownValue)
{
    EXPECT_NEAR(eta_of_alpha(2.5, 1e-4), 0.0131465, 1e-7);
    for (double a : {1.1, 1.5, 2.0, 2.5, 3.7, 5.0})
        for (double p : {1e-1, 1e-3, 1e-6, 1e-9})
            EXPECT_NEAR(eta_of_alpha(a, p), static_cast<double>(eta_direct(a, p)),
                        1e-12 * eta_of_alpha(a, p));
}

TEST(Eta, VanishesForTinyTails)
{
    EXPECT_LT(eta_of_alpha(2.5, 1e-300), 1e-240);
    EXPECT_GT(eta_of_alpha(2.5, 1e-300), 0.0);
    double prev = 1.0;
    for (double p = 1e-2; p > 1e-100; p *= 1e-3) {
        const double e = eta_of_alpha(3.0, p);
        EXPECT_LT(e, prev);
        prev = e;
    }
}

TEST(Eta, DomainErrors)
{
    EXPECT_THROW(eta_of_alpha(0.9, 0.1), DomainError);
    EXPECT_THROW(eta_of_alpha(2.0, 0.0), DomainError);
    EXPECT_THROW(eta_of_alpha(2.0, 1.0), DomainError);
    EXPECT_THROW(eta_of_probs(0.0, 0.5), DomainError);
    EXPECT_THROW(eta_of_probs(0.5, 1.0), DomainError);
    EXPECT_THROW(phi(0.0), DomainError);
    EXPECT_THROW(eta_min(1.5), DomainError);
    EXPECT_THROW(delta_var_mapped(0.0, 2.0, 10), DomainError);
    EXPECT_THROW(delta_var_mapped(0.5, 0.5, 10), DomainError);
}

TEST(Eta, FixedAlphaShape)
{
    // max/min of eta over alpha in [2, 4], from a 30-digit evaluation.
    const std::pair<double, double> spread[] = {{1e-4, 1.5210199316}, {1e-6, 1.6624251933}, {1e-8, 3.0231349190}};
    for (const auto [p, expected] : spread) {
        double prev = eta_of_alpha(1.0, p);
        for (int i = 101; i <= 180; ++i) {
            const double e = eta_of_alpha(i / 100.0, p);
            EXPECT_LT(e, prev) << "alpha " << i / 100.0;
            prev = e;
        }
        double lo = 1e300, hi = 0;
        for (int i = 200; i <= 400; ++i) {
            const double e = eta_of_alpha(i / 100.0, p);
            lo = std::min(lo, e);
            hi = std::max(hi, e);
        }
        EXPECT_NEAR(hi / lo, expected, 1e-9) << "P " << p;
    }
}

TEST(EtaOfProbs, ConsistentWithEtaOfAlpha)
{
    EXPECT_NEAR(eta_of_probs(0.3, 0.3), 1.0, 1e-14);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> A(1.0, 5.0), L(-12.0, -0.5);
    for (int i = 0; i < 500; ++i) {
        const double a = A(rng);
        const double p = std::pow(10.0, L(rng));
        const double u = std::pow(p, 1.0 / (a * a));
        EXPECT_NEAR(eta_of_probs(u, p) / eta_of_alpha(a, p), 1.0, 1e-10) << a << " " << p;
    }
}

TEST(EtaOfProbs, RecommendedAlphaConsistency)
{
    const double a = recommend_alpha(1e-6).alpha;
    EXPECT_NEAR(eta_of_probs(0.2032, 1e-6) / eta_of_alpha(a, 1e-6), 1.0, 1e-6);
}

TEST(EtaOfProbs, Reciprocal)
{
    for (double u : {0.01, 0.2, 0.7})
        for (double p : {1e-8, 1e-3, 0.4}) EXPECT_NEAR(eta_of_probs(u, p) * eta_of_probs(p, u), 1.0, 1e-12);
}

TEST(OptimalU, Value)
{
    const auto t0 = std::chrono::steady_clock::now();
    const double u = optimal_u();
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1.0);
    EXPECT_NEAR(u, 0.2032, 5e-4);
    EXPECT_NEAR(u, 0.2031878, 2e-6);
    EXPECT_LE(operating_cost(u), operating_cost(0.1));
    EXPECT_LE(operating_cost(u), operating_cost(0.4));
}

TEST(OptimalU, StationaryPoint)
{
    const double u = optimal_u();
    const double h = 1e-4;
    const auto deriv = [](double x) {
        const double e = 1e-6;
        return (operating_cost(x + e) - operating_cost(x - e)) / (2 * e);
    };
    EXPECT_LT(deriv(u - h), 0.0);
    EXPECT_GT(deriv(u + h), 0.0);
}

TEST(OptimalU, DenseGridAgrees)
{
    double best = 0, fbest = 1e300;
    for (int i = 1; i < 1000000; ++i) {
        const double x = i * 1e-6;
        const double f = operating_cost(x);
        if (f < fbest) {
            fbest = f;
            best = x;
        }
    }
    EXPECT_NEAR(optimal_u(), best, 1e-4);
}

TEST(GoldenSection, Quadratic)
{
    const auto r = golden_section_minimize([](double x) { return (x - 0.3) * (x - 0.3); }, -1, 1, 1e-9);
    EXPECT_NEAR(r.argmin, 0.3, 1e-9);
    EXPECT_LT(r.value, 1e-18);
    EXPECT_GT(r.iterations, 10);
}

TEST(EtaMin, Shape)
{
    EXPECT_NEAR(eta_min(optimal_u()), 1.0, 1e-12);
    EXPECT_LT(eta_min(1e-8), eta_min(1e-4));
    double prev = 0;
    for (double lp = -12; lp <= -1; lp += 0.05) {
        const double e = eta_min(std::pow(10.0, lp));
        EXPECT_GT(e, prev);
        prev = e;
    }
}

TEST(Phi, Examples)
{
    EXPECT_NEAR(phi(0.01), 1.0, 1e-14);
    EXPECT_NEAR(phi(0.2, 0.2), 1.0, 1e-14);
    EXPECT_NEAR(phi(1e-4), 99e-4 / (1 - 1e-4), 1e-16);
    for (double lp = -8; lp <= -3; lp += 0.1) {
        const double p = std::pow(10.0, lp);
        const double ratio = phi(p) / eta_min(p);
        EXPECT_LT(ratio, 10.0);
        EXPECT_GT(ratio, 0.1);
    }
}

TEST(Fig3, OnlySmallAlphaDegradesMuch)
{
    for (double p : {1e-6, 1e-8, 1e-10}) {
        const double e15 = eta_of_alpha(1.5, p) / eta_min(p);
        const double e25 = eta_of_alpha(2.5, p) / eta_min(p);
        const double e35 = eta_of_alpha(3.5, p) / eta_min(p);
        EXPECT_GT(e15, e25);
        EXPECT_GT(e15, e35);
        EXPECT_GE(e25, 1.0 - 1e-12);
        EXPECT_GE(e35, 1.0 - 1e-12);
    }
}

TEST(Binomial, Examples)
{
    EXPECT_EQ(binomial_var(0.0, 10), 0.0);
    EXPECT_EQ(binomial_var(1.0, 10), 0.0);
    EXPECT_DOUBLE_EQ(binomial_var(0.5, 100), 2.5e-3);
    EXPECT_THROW(binomial_var(0.5, 0), DomainError);
}

TEST(Binomial, MonteCarlo)
{
    const double p = 0.2032;
    const int n = 10000;
    std::mt19937_64 rng(2024);
    std::binomial_distribution<int> B(n, p);
    std::vector<double> props;
    for (int i = 0; i < 2000; ++i) props.push_back(static_cast<double>(B(rng)) / n);
    EXPECT_NEAR(sample_variance(props) / binomial_var(p, n), 1.0, 0.1);
}

TEST(DeltaMethod, ReducesAndReproducesEta)
{
    EXPECT_DOUBLE_EQ(delta_var_mapped(0.3, 1.0, 50), binomial_var(0.3, 50));
    for (double a : {1.5, 2.5, 3.5})
        for (double p : {1e-3, 1e-5, 1e-7}) {
            const double u = std::pow(p, 1.0 / (a * a));
            const double ratio = delta_var_mapped(u, a, 1000) / binomial_var(p, 1000);
            EXPECT_NEAR(ratio / eta_of_alpha(a, p), 1.0, 1e-9);
        }
}

TEST(DeltaMethod, MonteCarlo)
{
    const double u = 0.2, a = 2.0;
    const int n = 10000;
    std::mt19937_64 rng(77);
    std::binomial_distribution<int> B(n, u);
    std::vector<double> mapped;
    for (int i = 0; i < 2000; ++i) mapped.push_back(std::pow(static_cast<double>(B(rng)) / n, a * a));
    EXPECT_NEAR(sample_variance(mapped) / delta_var_mapped(u, a, n), 1.0, 0.25);
}
