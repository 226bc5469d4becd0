#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "fdi/dag.hpp"
#include "fdi/errors.hpp"
#include "fdi/forest.hpp"

namespace fdi {

namespace detail {

// Regularized incomplete gamma functions (series / continued fraction),
// enough precision for test p-values.
inline double gamma_p_series(double a, double x) {
    double sum = 1.0 / a;
    double term = sum;
    for (int n = 1; n < 500; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

// Survival function of the chi-squared distribution with df degrees of
// freedom: P(X > x).
inline double chi2_sf(double x, double df) {
    if (!(df > 0.0)) throw Error(Errc::InvalidArgument, "chi2_sf requires df > 0");
    if (x <= 0.0) return 1.0;
    const double a = 0.5 * df;
    const double hx = 0.5 * x;
    return hx < a + 1.0 ? 1.0 - detail::gamma_p_series(a, hx) : detail::gamma_q_contfrac(a, hx);
}

struct IndependenceVerdict {
    bool violated = false;
    double g_statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
    std::size_t n_rows = 0;
};

namespace detail {

// Discrete codes for one variable: distinct values act as categories
// when few, otherwise quantile bins.
inline std::vector<int> discretize(const std::vector<double>& values, int max_bins) {
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::vector<int> codes(values.size());
    if (sorted.size() <= static_cast<std::size_t>(max_bins)) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            codes[i] = static_cast<int>(
                std::lower_bound(sorted.begin(), sorted.end(), values[i]) - sorted.begin());
        }
        return codes;
    }

    std::vector<double> all = values;
    std::sort(all.begin(), all.end());
    std::vector<double> edges;
    for (int j = 1; j < max_bins; ++j) {
        const auto pos = static_cast<std::size_t>(
            static_cast<double>(j) * static_cast<double>(all.size()) / max_bins);
        edges.push_back(all[std::min(pos, all.size() - 1)]);
    }
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (std::size_t i = 0; i < values.size(); ++i) {
        codes[i] = static_cast<int>(
            std::lower_bound(edges.begin(), edges.end(), values[i]) - edges.begin());
    }
    return codes;
}

// Resolve a variable name to a per-row value vector. Besides the
// feature columns, `label` (class index) and `fault:<Class>` (binary
// indicator) are available.
inline std::vector<double> variable_values(const FeatureMatrix& fm, const std::string& name) {
    const auto col = std::find(fm.columns.begin(), fm.columns.end(), name);
    std::vector<double> out(fm.n_rows());
    if (col != fm.columns.end()) {
        const auto c = static_cast<std::size_t>(col - fm.columns.begin());
        for (std::size_t i = 0; i < fm.n_rows(); ++i) out[i] = fm.rows[i][c];
        return out;
    }
    if (name == "label") {
        for (std::size_t i = 0; i < fm.n_rows(); ++i) out[i] = fm.labels[i];
        return out;
    }
    if (name.rfind("fault:", 0) == 0) {
        const std::string cls = name.substr(6);
        const auto it = std::find(fm.classes.begin(), fm.classes.end(), cls);
        if (it == fm.classes.end()) throw Error(Errc::UnknownNode, "unknown class: " + cls);
        const int target = static_cast<int>(it - fm.classes.begin());
        for (std::size_t i = 0; i < fm.n_rows(); ++i) out[i] = fm.labels[i] == target ? 1.0 : 0.0;
        return out;
    }
    throw Error(Errc::UnknownNode, "unknown variable: " + name);
}

}  // namespace detail

// G-test of conditional independence of x and y given the strata of z,
// on discretized data. "Violated" when p < alpha.
inline IndependenceVerdict check_independence(const FeatureMatrix& fm,
                                              const IndependenceStatement& stmt, double alpha = 0.01,
                                              int bins = 5) {
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw Error(Errc::InvalidArgument, "alpha must be in (0,1)");
    }
    if (bins < 2) throw Error(Errc::InvalidArgument, "bins must be >= 2");
    if (fm.n_rows() == 0) throw Error(Errc::InsufficientData, "no data rows");

    const auto x_codes = detail::discretize(detail::variable_values(fm, stmt.x), bins);
    const auto y_codes = detail::discretize(detail::variable_values(fm, stmt.y), bins);
    std::vector<std::vector<int>> z_codes;
    for (const auto& zv : stmt.given) {
        z_codes.push_back(detail::discretize(detail::variable_values(fm, zv), bins));
    }

    const int nx = x_codes.empty() ? 0 : *std::max_element(x_codes.begin(), x_codes.end()) + 1;
    const int ny = y_codes.empty() ? 0 : *std::max_element(y_codes.begin(), y_codes.end()) + 1;

    std::map<std::vector<int>, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < fm.n_rows(); ++i) {
        std::vector<int> key;
        for (const auto& zc : z_codes) key.push_back(zc[i]);
        strata[key].push_back(i);
    }

    double g = 0.0;
    int df = 0;
    for (const auto& [key, rows] : strata) {
        if (rows.size() < 20) {
            throw Error(Errc::InsufficientData,
                        "stratum with fewer than 20 rows; coarsen bins or add data");
        }
        const auto unx = static_cast<std::size_t>(nx);
        const auto uny = static_cast<std::size_t>(ny);
        std::vector<double> table(unx * uny, 0.0);
        std::vector<double> row_tot(unx, 0.0);
        std::vector<double> col_tot(uny, 0.0);
        for (std::size_t i : rows) {
            const auto xc = static_cast<std::size_t>(x_codes[i]);
            const auto yc = static_cast<std::size_t>(y_codes[i]);
            table[xc * uny + yc] += 1.0;
            row_tot[xc] += 1.0;
            col_tot[yc] += 1.0;
        }
        const double n = static_cast<double>(rows.size());
        for (std::size_t a = 0; a < unx; ++a) {
            for (std::size_t b = 0; b < uny; ++b) {
                const double obs = table[a * uny + b];
                if (obs <= 0.0) continue;
                const double expct = row_tot[a] * col_tot[b] / n;
                g += 2.0 * obs * std::log(obs / expct);
            }
        }
        const auto nz_rows = std::count_if(row_tot.begin(), row_tot.end(),
                                           [](double v) { return v > 0.0; });
        const auto nz_cols = std::count_if(col_tot.begin(), col_tot.end(),
                                           [](double v) { return v > 0.0; });
        df += static_cast<int>((std::max<std::ptrdiff_t>(nz_rows, 1) - 1) *
                               (std::max<std::ptrdiff_t>(nz_cols, 1) - 1));
    }

    IndependenceVerdict v;
    v.g_statistic = g;
    v.df = df;
    v.n_rows = fm.n_rows();
    v.p_value = df == 0 ? 1.0 : chi2_sf(g, df);
    v.violated = v.p_value < alpha;
    return v;
}

}  // namespace fdi
