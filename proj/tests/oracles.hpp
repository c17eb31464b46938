#pragma once

// Test-only reference implementations. Everything here is deliberately
// independent of the library code paths it checks: plain grid integration,
// Monte Carlo, permutation nulls and linear-space EM.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "snpmix/genotype_model.hpp"
#include "snpmix/mixture_em.hpp"
#include "snpmix/snpwise.hpp"

namespace oracles {

// I_x(a, b) for integer a, b via the binomial sum.
inline double binomial_sum_inc_beta(double x, int a, int b) {
    const int n = a + b - 1;
    double total = 0.0;
    for (int j = a; j <= n; ++j) {
        double c = 1.0;
        for (int i = 0; i < j; ++i) c = c * (n - i) / (i + 1);
        total += c * std::pow(x, j) * std::pow(1.0 - x, n - j);
    }
    return total;
}

struct McEstimate {
    double mean;
    double se;
};

// Pr(U > V) by paired beta draws (gamma ratio construction).
inline McEstimate mc_beta_exceedance(double a1, double b1, double a2, double b2,
                                     std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> ga1(a1, 1.0), gb1(b1, 1.0), ga2(a2, 1.0), gb2(b2, 1.0);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x1 = ga1(rng);
        const double u = x1 / (x1 + gb1(rng));
        const double x2 = ga2(rng);
        const double v = x2 / (x2 + gb2(rng));
        hits += u > v;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    const double var = std::max(p * (1.0 - p), 1.0 / static_cast<double>(n));
    return {p, std::sqrt(var / static_cast<double>(n))};
}

namespace detail {

// log of a Simpson sum over [0,1] of exp(logf(x)), n panels (n even).
template <class LogF>
double log_simpson_01(LogF&& logf, std::size_t n) {
    const double h = 1.0 / static_cast<double>(n);
    std::vector<double> logs(n + 1);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= n; ++i) {
        logs[i] = logf(i * h);
        mx = std::max(mx, logs[i]);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sum += w * std::exp(logs[i] - mx);
    }
    return mx + std::log(sum * h / 3.0);
}

inline double power_log(double base, double exponent) {
    if (exponent == 0.0) return 0.0;
    if (base <= 0.0) return -std::numeric_limits<double>::infinity();
    return exponent * std::log(base);
}

}  // namespace detail

// Grid integral of 2^n1 * theta^m (1-theta)^(2n-m) * beta_pdf(theta; alpha,
// beta), refined until stable.
inline double grid_log_xi_null(const snpmix::SnpSuffStats& s, const snpmix::Hyperparams& h) {
    const double m = static_cast<double>(s.m_case) + s.m_ctrl;
    const double n1 = static_cast<double>(s.n1_case) + s.n1_ctrl;
    const double two_n = 2.0 * (static_cast<double>(s.nobs_case) + s.nobs_ctrl);
    const double ea = h.alpha + m - 1.0;
    const double eb = h.beta + two_n - m - 1.0;
    const double c = n1 * std::numbers::ln2 - snpmix::log_beta(h.alpha, h.beta);
    auto logf = [&](double t) {
        return c + detail::power_log(t, ea) + detail::power_log(1.0 - t, eb);
    };
    double prev = detail::log_simpson_01(logf, 1 << 12);
    for (int k = 13; k <= 22; ++k) {
        const double cur = detail::log_simpson_01(logf, std::size_t{1} << k);
        if (std::fabs(cur - prev) < 1e-9) return cur;
        prev = cur;
    }
    return prev;
}

// Grid integral of the constrained product density behind the signed
// marginal: 2^n1 * 2 * iint_{x > y} f_case(x) f_ctrl(y) dx dy for sign '+'
// (the '-' sign swaps the roles). Inner integrals accumulate on the same
// grid as the outer sum (trapezoid), all in scaled log space.
inline double grid_log_xi_signed(const snpmix::SnpSuffStats& s, const snpmix::Hyperparams& h,
                                 snpmix::Sign sign) {
    double m_hi = s.m_case, n_hi = s.nobs_case;
    double m_lo = s.m_ctrl, n_lo = s.nobs_ctrl;
    if (sign == snpmix::Sign::minus) {
        std::swap(m_hi, m_lo);
        std::swap(n_hi, n_lo);
    }
    const double ea_hi = h.alpha + m_hi - 1.0, eb_hi = h.beta + 2.0 * n_hi - m_hi - 1.0;
    const double ea_lo = h.alpha + m_lo - 1.0, eb_lo = h.beta + 2.0 * n_lo - m_lo - 1.0;
    auto log_hi = [&](double t) {
        return detail::power_log(t, ea_hi) + detail::power_log(1.0 - t, eb_hi);
    };
    auto log_lo = [&](double t) {
        return detail::power_log(t, ea_lo) + detail::power_log(1.0 - t, eb_lo);
    };

    auto log_add = [](double a, double b) {
        if (a == -std::numeric_limits<double>::infinity()) return b;
        if (b == -std::numeric_limits<double>::infinity()) return a;
        const double mx = std::max(a, b);
        return mx + std::log1p(std::exp(std::min(a, b) - mx));
    };
    auto evaluate = [&](std::size_t n) {
        // cumulative trapezoid of the lower variable and the outer sum both
        // run in log space so arbitrarily small tail products survive
        const double h_step = 1.0 / static_cast<double>(n);
        const double log_h = std::log(h_step);
        std::vector<double> lhi(n + 1), llo(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            const double t = i * h_step;
            lhi[i] = log_hi(t);
            llo[i] = log_lo(t);
        }
        std::vector<double> log_cum(n + 1, -std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < n; ++i) {
            const double log_panel = std::log(0.5) + log_h + log_add(llo[i], llo[i + 1]);
            log_cum[i + 1] = log_add(log_cum[i], log_panel);
        }
        double log_outer = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i <= n; ++i) {
            const double log_w = (i == 0 || i == n) ? std::log(0.5) : 0.0;
            log_outer = log_add(log_outer, log_w + lhi[i] + log_cum[i]);
        }
        return log_outer + log_h;
    };

    double prev = evaluate(1 << 12);
    for (int k = 13; k <= 17; ++k) {
        const double cur = evaluate(std::size_t{1} << k);
        if (std::fabs(cur - prev) < 2e-6) {
            prev = cur;
            break;
        }
        prev = cur;
    }
    return (static_cast<double>(s.n1_case) + s.n1_ctrl) * std::numbers::ln2 +
           std::numbers::ln2 - 2.0 * snpmix::log_beta(h.alpha, h.beta) + prev;
}

// Linear-space fixed-point iteration of the MAP-EM update, written straight
// from the update equations.
inline snpmix::Weights em_fixed_point(std::span<const snpmix::LogMarginals> marginals,
                                      const snpmix::Weights& init,
                                      const snpmix::Weights& pseudo,
                                      int iterations = 20000, double tol = 1e-14) {
    const std::size_t n = marginals.size();
    std::vector<std::array<double, 3>> scaled(n);
    for (std::size_t g = 0; g < n; ++g) {
        const std::array<double, 3> xi = {marginals[g].log_xi0, marginals[g].log_xi_plus,
                                          marginals[g].log_xi_minus};
        const double mx = std::max({xi[0], xi[1], xi[2]});
        for (int k = 0; k < 3; ++k) scaled[g][k] = std::exp(xi[k] - mx);
    }
    snpmix::Weights pi = init;
    for (int iter = 0; iter < iterations; ++iter) {
        std::array<double, 3> sums = {0.0, 0.0, 0.0};
        for (std::size_t g = 0; g < n; ++g) {
            const double w0 = pi[0] * scaled[g][0];
            const double w1 = pi[1] * scaled[g][1];
            const double w2 = pi[2] * scaled[g][2];
            const double tot = w0 + w1 + w2;
            sums[0] += w0 / tot;
            sums[1] += w1 / tot;
            sums[2] += w2 / tot;
        }
        double denom = static_cast<double>(n) - 3.0;
        for (double b : pseudo) denom += b;
        snpmix::Weights next;
        double delta = 0.0;
        for (int k = 0; k < 3; ++k) {
            next[k] = (sums[k] + pseudo[k] - 1.0) / denom;
            delta = std::max(delta, std::fabs(next[k] - pi[k]));
        }
        pi = next;
        if (delta < tol) break;
    }
    return pi;
}

// Two-sided permutation p-value of the trend statistic: case labels are
// reshuffled with margins fixed, so only T = sum of case genotypes varies.
// Returns the mid-p (ties count half), the comparable quantity when a
// discrete permutation null meets a continuous asymptotic approximation.
inline double permutation_trend_p(const snpmix::ContingencyTable23& t, std::size_t shuffles,
                                  std::uint64_t seed) {
    std::vector<std::int8_t> values;
    for (int g = 0; g < 3; ++g) {
        const std::size_t count = t.cases[g] + t.controls[g];
        values.insert(values.end(), count, static_cast<std::int8_t>(g));
    }
    const std::size_t n_total = values.size();
    const std::size_t n_cases = t.cases[0] + t.cases[1] + t.cases[2];
    double sum_w = 0.0;
    for (auto v : values) sum_w += v;
    const double expected =
        sum_w * static_cast<double>(n_cases) / static_cast<double>(n_total);
    const double observed = t.cases[1] + 2.0 * t.cases[2];
    const double obs_dev = std::fabs(observed - expected);

    std::mt19937_64 rng(seed);
    std::size_t strict = 0, ties = 0;
    for (std::size_t b = 0; b < shuffles; ++b) {
        for (std::size_t j = 0; j < n_cases; ++j) {
            std::uniform_int_distribution<std::size_t> pick(j, n_total - 1);
            std::swap(values[j], values[pick(rng)]);
        }
        double tb = 0.0;
        for (std::size_t j = 0; j < n_cases; ++j) tb += values[j];
        const double dev = std::fabs(tb - expected);
        if (dev > obs_dev + 1e-9)
            ++strict;
        else if (dev > obs_dev - 1e-9)
            ++ties;
    }
    return (static_cast<double>(strict) + 0.5 * static_cast<double>(ties)) /
           static_cast<double>(shuffles);
}

// Independent maximization of the 3-cell grouped logistic likelihood by
// coordinate descent with shrinking steps.
inline double logistic_slope_grid_polish(const snpmix::ContingencyTable23& t) {
    std::array<double, 3> n, r;
    for (int i = 0; i < 3; ++i) {
        n[i] = static_cast<double>(t.cases[i]) + t.controls[i];
        r[i] = t.cases[i];
    }
    auto loglik = [&](double b0, double b1) {
        double total = 0.0;
        for (int i = 0; i < 3; ++i) {
            if (n[i] == 0.0) continue;
            const double eta = b0 + b1 * i;
            total += r[i] * eta - n[i] * std::log1p(std::exp(eta));
        }
        return total;
    };
    double b0 = 0.0, b1 = 0.0;
    for (int rounds = 0; rounds < 60; ++rounds) {
        for (double step : {0.5, 0.1, 0.01, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7}) {
            while (loglik(b0 + step, b1) > loglik(b0, b1)) b0 += step;
            while (loglik(b0 - step, b1) > loglik(b0, b1)) b0 -= step;
            while (loglik(b0, b1 + step) > loglik(b0, b1)) b1 += step;
            while (loglik(b0, b1 - step) > loglik(b0, b1)) b1 -= step;
        }
    }
    return b1;
}

}  // namespace oracles
