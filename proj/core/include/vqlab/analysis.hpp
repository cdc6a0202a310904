#pragma once

#include <cstdint>

// Closed-form variance-reduction model for the scaled virtual-queue estimator.
// `tail_p` is the target tail probability P{Q > x}; `u` is the VQ3 tail
// probability P{Q' > x'}. All formulas are evaluated in long double, with powers
// taken in log space.

namespace vqlab::analysis {

struct EtaPoint {
    double alpha = 1.0;
    double tail_p = 0.0;
    double eta = 0.0;
};

// alpha^4 (P^(1 - 1/alpha^2) - P) / (1 - P). Throws DomainError unless
// alpha >= 1 and 0 < tail_p < 1.
double eta_of_alpha(double alpha, double tail_p);

// [(1 - u) / (u ln^2 u)] * [P ln^2 P / (1 - P)], both arguments in (0, 1).
double eta_of_probs(double u, double tail_p);

// f(u) = (1 - u) / (u ln^2 u), the only u-dependent factor of eta_of_probs.
double operating_cost(double u);

struct MinimizeResult {
    double argmin = 0.0;
    double value = 0.0;
    int iterations = 0;
};

// Golden-section search for a unimodal function on [lo, hi].
template <typename F>
MinimizeResult golden_section_minimize(F&& f, double lo, double hi, double tol);

// Minimiser of operating_cost on (1e-6, 1 - 1e-6), tolerance 1e-7. Cached.
double optimal_u();

// eta_of_probs(optimal_u(), tail_p).
double eta_min(double tail_p);

// [(1 - ref) / ref] * [P / (1 - P)]: squared-COV ratio of direct measurement
// of a `reference_p`-sized probability to direct measurement of `tail_p`.
double phi(double tail_p, double reference_p = 0.01);

// p (1 - p) / n_trials.
double binomial_var(double p, std::uint64_t n_trials);

// Delta-method variance of u_hat^(alpha^2):
// binomial_var(u, n) * alpha^4 * u^(2 (alpha^2 - 1)).
double delta_var_mapped(double u, double alpha, std::uint64_t n_trials);

template <typename F>
MinimizeResult golden_section_minimize(F&& f, double lo, double hi, double tol)
{
    constexpr double inv_phi = 0.61803398874989484820;
    double a = lo;
    double b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    int it = 0;
    while (b - a > tol) {
        ++it;
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, f(x), it};
}

}  // namespace vqlab::analysis
