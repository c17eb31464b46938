#pragma once

// Log-stable special functions and the quadrature primitives behind the
// marginal-likelihood integrals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

#include "snpmix/error.hpp"

namespace snpmix {

// Probabilities are clamped into this range before any logarithm so that
// log-space arithmetic never sees -inf from rounding alone.
inline constexpr double kProbFloor = 1e-300;
inline constexpr double kProbCeil = 1.0 - 1e-16;

inline double clamp_prob(double p) {
    return std::clamp(p, kProbFloor, kProbCeil);
}

struct QuadratureConfig {
    int node_count = 128;
    int refinement_limit = 8;
    double rel_tolerance = 1e-8;

    void validate() const {
        if (node_count < 16)
            throw std::domain_error("QuadratureConfig: node_count must be >= 16");
        if (refinement_limit < 1)
            throw std::domain_error("QuadratureConfig: refinement_limit must be positive");
        if (!(rel_tolerance > 0.0) || !(rel_tolerance < 1e-3))
            throw std::domain_error("QuadratureConfig: rel_tolerance must lie in (0, 1e-3)");
    }
};

inline double log_beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw std::domain_error("log_beta: parameters must be positive and finite");
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace detail {

// Lentz continued fraction for the incomplete beta.
inline double beta_cont_frac(double a, double b, double x) {
    constexpr double eps = 1e-15;
    constexpr double fpmin = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 20000; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw NumericalError("reg_inc_beta: continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double reg_inc_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw std::domain_error("reg_inc_beta: parameters must be positive and finite");
    if (!(x >= 0.0) || !(x <= 1.0))
        throw std::domain_error("reg_inc_beta: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_bt = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
    if (x < (a + 1.0) / (a + b + 2.0))
        return std::exp(log_bt) * detail::beta_cont_frac(a, b, x) / a;
    return 1.0 - std::exp(log_bt) * detail::beta_cont_frac(b, a, 1.0 - x) / b;
}

// Quantile of Beta(a, b): smallest x with I_x(a, b) = p, by bisection with
// Newton polish.
inline double inverse_reg_inc_beta(double p, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::domain_error("inverse_reg_inc_beta: parameters must be positive");
    if (!(p >= 0.0) || !(p <= 1.0))
        throw std::domain_error("inverse_reg_inc_beta: p must lie in [0, 1]");
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    const double log_norm = log_beta(a, b);
    double lo = 0.0, hi = 1.0;
    double x = a / (a + b);
    for (int iter = 0; iter < 200; ++iter) {
        const double f = reg_inc_beta(x, a, b) - p;
        if (f > 0.0)
            hi = x;
        else
            lo = x;
        if (std::fabs(f) < 1e-15 || hi - lo < 1e-16) break;
        const double log_pdf =
            (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_norm;
        double next = 0.5 * (lo + hi);
        if (log_pdf > -700.0) {
            const double candidate = x - f / std::exp(log_pdf);
            if (candidate > lo && candidate < hi) next = candidate;
        }
        x = next;
    }
    return x;
}

inline double log_sum_exp(std::span<const double> values) {
    if (values.empty()) throw std::domain_error("log_sum_exp: empty input");
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : values) {
        if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
            throw std::domain_error("log_sum_exp: entries must be finite or -inf");
        mx = std::max(mx, v);
    }
    if (mx == -std::numeric_limits<double>::infinity()) return mx;
    double sum = 0.0;
    for (double v : values) sum += std::exp(v - mx);
    return mx + std::log(sum);
}

inline double log_sum_exp(std::initializer_list<double> values) {
    return log_sum_exp(std::span<const double>(values.begin(), values.size()));
}

// ---------------------------------------------------------------------------
// Gauss-Legendre rules, cached per node count.

struct GaussLegendreRule {
    std::vector<double> nodes;    // on (-1, 1)
    std::vector<double> weights;
};

namespace detail {

inline std::shared_ptr<const GaussLegendreRule> make_gauss_legendre(int n) {
    auto rule = std::make_shared<GaussLegendreRule>();
    rule->nodes.resize(n);
    rule->weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        rule->nodes[i] = -x;
        rule->nodes[n - 1 - i] = x;
        rule->weights[i] = rule->weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    return rule;
}

inline std::shared_ptr<const GaussLegendreRule> gauss_legendre_rule(int n) {
    thread_local std::map<int, std::shared_ptr<const GaussLegendreRule>> local;
    if (auto it = local.find(n); it != local.end()) return it->second;
    static std::mutex mu;
    static std::map<int, std::shared_ptr<const GaussLegendreRule>> shared;
    std::shared_ptr<const GaussLegendreRule> rule;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto& slot = shared[n];
        if (!slot) slot = make_gauss_legendre(n);
        rule = slot;
    }
    local[n] = rule;
    return rule;
}

struct QuadratureEstimate {
    double value = 0.0;  // integral of cdf * pdf
    double mass = 0.0;   // integral of the pdf alone, a built-in sanity gauge
};

// Composite Gauss-Legendre over [lo, hi] with 2^level panels. fn returns the
// (cdf * pdf, pdf) pair at a node.
template <class Fn>
QuadratureEstimate composite_gl(const GaussLegendreRule& rule, double lo, double hi,
                                int level, Fn&& fn) {
    const int panels = 1 << level;
    const double width = hi - lo;
    QuadratureEstimate est;
    for (int p = 0; p < panels; ++p) {
        const double a = lo + width * p / panels;
        const double b = lo + width * (p + 1) / panels;
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double acc = 0.0, acc_mass = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const auto [v, m] = fn(mid + half * rule.nodes[i]);
            acc += rule.weights[i] * v;
            acc_mass += rule.weights[i] * m;
        }
        est.value += acc * half;
        est.mass += acc_mass * half;
    }
    return est;
}

// tanh-sinh rule over (0, 1) at step h = h0 / 2^level; absorbs integrable
// endpoint singularities that defeat Gauss-Legendre.
template <class Fn>
QuadratureEstimate tanh_sinh_01(int level, Fn&& fn) {
    const double h = 0.5 / (1 << level);
    const double t_max = 6.0;
    QuadratureEstimate est;
    const long n_steps = static_cast<long>(t_max / h);
    for (long j = -n_steps; j <= n_steps; ++j) {
        const double t = j * h;
        const double s = 0.5 * M_PI * std::sinh(t);
        const double x = 0.5 * (1.0 + std::tanh(s));
        if (x <= 0.0 || x >= 1.0) continue;
        const double w = 0.25 * M_PI * std::cosh(t) / (std::cosh(s) * std::cosh(s));
        const auto [v, m] = fn(x);
        est.value += w * v;
        est.mass += w * m;
    }
    est.value *= h;
    est.mass *= h;
    return est;
}

}  // namespace detail

// Pr(U > V) for U ~ Beta(a1, b1), V ~ Beta(a2, b2), via
// integral of I_u(a2, b2) * beta_pdf(u; a1, b1).
//
// The reflection (U, V) -> (1 - V, 1 - U) yields an equivalent integral with
// parameters (b2, a2, b1, a1); whichever orientation keeps the endpoint
// exponents of the outer density bounded is used. Integration runs over
// mean +/- 10 sd of the outer variable (clipped to (0,1)), refined dyadically
// until two successive estimates agree to rel_tolerance. Shape parameters
// below 1 put an integrable singularity inside the interval; those fall back
// to a tanh-sinh rule over the full (0,1), refined the same way.
inline double beta_exceedance(double a1, double b1, double a2, double b2,
                              const QuadratureConfig& cfg = {}) {
    for (double v : {a1, b1, a2, b2})
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::domain_error("beta_exceedance: parameters must be positive and finite");
    cfg.validate();

    double oa = a1, ob = b1, ca = a2, cb = b2;
    if (std::min(a2, b1 + b2) > std::min(b1, a1 + a2)) {
        oa = b2;
        ob = a2;
        ca = b1;
        cb = a1;
    }
    const double log_norm = log_beta(oa, ob);
    auto integrand = [&](double u) {
        const double log_pdf =
            (oa - 1.0) * std::log(u) + (ob - 1.0) * std::log1p(-u) - log_norm;
        if (log_pdf < -745.0) return std::pair{0.0, 0.0};
        const double pdf = std::exp(log_pdf);
        return std::pair{reg_inc_beta(u, ca, cb) * pdf, pdf};
    };

    // Gauss-Legendre converges only algebraically when an endpoint exponent
    // is small (or the outer density is outright singular there); route those
    // to tanh-sinh, which absorbs the kink.
    const bool smooth = ob >= 3.0 && oa + ca >= 3.0 && oa >= 1.0;
    double lo = 0.0, hi = 1.0;
    if (smooth) {
        // effective support of one Beta: mean +/- 10 sd, widened to the 1e-14
        // quantiles for small shapes whose exponential-type tails outrun 10 sd
        auto support = [](double a, double b) {
            const double s = a + b;
            const double mean = a / s;
            const double sd = std::sqrt(a * b / (s * s * (s + 1.0)));
            double blo = mean - 10.0 * sd;
            double bhi = mean + 10.0 * sd;
            if (std::min(a, b) < 20.0) {
                blo = std::min(blo, inverse_reg_inc_beta(1e-14, a, b));
                bhi = std::max(bhi, inverse_reg_inc_beta(1.0 - 1e-14, a, b));
            }
            return std::pair<double, double>{std::max(blo, 0.0), std::min(bhi, 1.0)};
        };
        // the interval must hold both the outer density's mass and the inner
        // CDF's transition; take the union of the two supports
        const auto [u_lo, u_hi] = support(oa, ob);
        const auto [v_lo, v_hi] = support(ca, cb);
        lo = std::min(u_lo, v_lo);
        hi = std::max(u_hi, v_hi);
        if (!(lo < hi)) {
            lo = 0.0;
            hi = 1.0;
        }
    }

    auto rule = detail::gauss_legendre_rule(cfg.node_count);
    double prev = std::numeric_limits<double>::quiet_NaN();
    bool prev_seen_mass = false;
    for (int level = 0; level <= cfg.refinement_limit; ++level) {
        const auto est = smooth ? detail::composite_gl(*rule, lo, hi, level, integrand)
                                : detail::tanh_sinh_01(level, integrand);
        // a level only counts once it has actually seen the density's bulk;
        // otherwise two coarse all-zero sweeps could agree on a false zero.
        // (coarse gauge: the pdf integral has endpoint kinks the smooth value
        // integrand does not, so it converges slower than the value itself)
        const bool seen_mass = std::fabs(est.mass - 1.0) <= 1e-4;
        if (level > 0 && seen_mass && prev_seen_mass &&
            std::fabs(est.value - prev) <=
                cfg.rel_tolerance * std::max(std::fabs(est.value), 1e-12))
            return std::clamp(est.value, 0.0, 1.0);
        prev = est.value;
        prev_seen_mass = seen_mass;
    }
    throw ConvergenceError("beta_exceedance: quadrature did not converge",
                           std::clamp(prev, 0.0, 1.0));
}

// ---------------------------------------------------------------------------
// Gaussian and chi-square tails.

inline double normal_sf(double z) {
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

inline double normal_two_sided_p(double z) {
    return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

namespace detail {

// Regularized upper incomplete gamma Q(a, x); series for small x, continued
// fraction otherwise.
inline double reg_gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0)
        throw std::domain_error("reg_gamma_q: invalid arguments");
    if (x == 0.0) return 1.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double term = 1.0 / a;
        double sum = term;
        double ap = a;
        for (int i = 0; i < 1000; ++i) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
        }
        const double p = sum * std::exp(-x + a * std::log(x) - lg);
        return 1.0 - p;
    }
    constexpr double fpmin = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / fpmin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - lg);
}

}  // namespace detail

inline double chisq_sf(double stat, double df) {
    if (!(df > 0.0)) throw std::domain_error("chisq_sf: df must be positive");
    if (stat <= 0.0) return 1.0;
    return detail::reg_gamma_q(0.5 * df, 0.5 * stat);
}

}  // namespace snpmix
