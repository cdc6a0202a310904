#include "vqlab/analysis.hpp"

#include <cmath>
#include <string>

#include "vqlab/errors.hpp"

namespace vqlab::analysis {

namespace {

void require_open_unit(double p, const char* what)
{
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError(std::string(what) + " must lie in (0, 1)");
    }
}

void require_alpha(double alpha)
{
    if (!(alpha >= 1.0) || !std::isfinite(alpha)) {
        throw DomainError("alpha must be >= 1");
    }
}

long double first_factor(long double u)
{
    const long double lu = std::log(u);
    return (1.0L - u) / (u * lu * lu);
}

long double second_factor(long double p)
{
    const long double lp = std::log(p);
    return p * lp * lp / (1.0L - p);
}

}  // namespace

double eta_of_alpha(double alpha, double tail_p)
{
    require_alpha(alpha);
    require_open_unit(tail_p, "tail_p");
    const long double a2 = static_cast<long double>(alpha) * alpha;
    const long double p = tail_p;
    const long double lifted = std::exp((1.0L - 1.0L / a2) * std::log(p));
    return static_cast<double>(a2 * a2 * (lifted - p) / (1.0L - p));
}

double operating_cost(double u)
{
    require_open_unit(u, "u");
    return static_cast<double>(first_factor(u));
}

double eta_of_probs(double u, double tail_p)
{
    require_open_unit(u, "u");
    require_open_unit(tail_p, "tail_p");
    return static_cast<double>(first_factor(u) * second_factor(tail_p));
}

double optimal_u()
{
    static const double cached =
        golden_section_minimize([](double u) { return static_cast<double>(first_factor(u)); },
                                1e-6, 1.0 - 1e-6, 1e-7)
            .argmin;
    return cached;
}

double eta_min(double tail_p)
{
    return eta_of_probs(optimal_u(), tail_p);
}

double phi(double tail_p, double reference_p)
{
    require_open_unit(tail_p, "tail_p");
    require_open_unit(reference_p, "reference_p");
    const long double ref = reference_p;
    const long double p = tail_p;
    return static_cast<double>((1.0L - ref) / ref * (p / (1.0L - p)));
}

double binomial_var(double p, std::uint64_t n_trials)
{
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial_var: p must lie in [0, 1]");
    if (n_trials == 0) throw DomainError("binomial_var: n_trials must be >= 1");
    return p * (1.0 - p) / static_cast<double>(n_trials);
}

double delta_var_mapped(double u, double alpha, std::uint64_t n_trials)
{
    require_open_unit(u, "u");
    require_alpha(alpha);
    const long double a2 = static_cast<long double>(alpha) * alpha;
    const long double slope_sq = a2 * a2 * std::exp(2.0L * (a2 - 1.0L) * std::log((long double)u));
    return static_cast<double>(binomial_var(u, n_trials) * slope_sq);
}

}  // namespace vqlab::analysis
