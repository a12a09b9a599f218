#include "g4rl/pca.hpp"

#include <algorithm>
#include <cmath>

#include "g4rl/errors.hpp"

namespace g4rl {

namespace {

using Matrix = std::vector<std::vector<double>>;

std::vector<double> multiply(const Matrix& m, const std::vector<double>& v) {
    std::vector<double> out(m.size(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
    }
    return out;
}

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

void fix_sign(std::vector<double>& v) {
    std::size_t big = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (std::abs(v[i]) > std::abs(v[big])) big = i;
    }
    if (v[big] < 0.0) {
        for (auto& x : v) x = -x;
    }
}

/// Unit vector orthogonal to `basis`, starting from the axis least aligned with it.
std::vector<double> orthogonal_to(const std::vector<std::vector<double>>& basis, std::size_t dim) {
    for (std::size_t axis = 0; axis < dim; ++axis) {
        std::vector<double> v(dim, 0.0);
        v[axis] = 1.0;
        for (const auto& b : basis) {
            double d = 0.0;
            for (std::size_t i = 0; i < dim; ++i) d += v[i] * b[i];
            for (std::size_t i = 0; i < dim; ++i) v[i] -= d * b[i];
        }
        const double n = norm(v);
        if (n > 1e-6) {
            for (auto& x : v) x /= n;
            return v;
        }
    }
    return std::vector<double>(dim, 0.0);
}

/// Dominant eigenpair of a symmetric PSD matrix.
std::pair<double, std::vector<double>> power_iteration(const Matrix& c) {
    const std::size_t d = c.size();
    std::size_t start = 0;
    for (std::size_t i = 1; i < d; ++i) {
        if (c[i][i] > c[start][start]) start = i;
    }
    std::vector<double> v = c[start];
    double n = norm(v);
    if (n == 0.0) return {0.0, std::vector<double>(d, 0.0)};
    for (auto& x : v) x /= n;
    double lambda = 0.0;
    for (int it = 0; it < 20000; ++it) {
        auto w = multiply(c, v);
        n = norm(w);
        if (n == 0.0) return {0.0, v};
        for (auto& x : w) x /= n;
        double diff = 0.0;
        for (std::size_t i = 0; i < d; ++i) diff = std::max(diff, std::abs(w[i] - v[i]));
        v = std::move(w);
        lambda = n;
        if (diff < 1e-15) break;
    }
    return {lambda, v};
}

}  // namespace

PcaResult pca_2d(const std::vector<std::vector<double>>& rows) {
    PcaResult result;
    if (rows.size() < 2) {
        result.warning = "fewer than two embeddings; projection skipped";
        return result;
    }
    const std::size_t d = rows.front().size();
    for (const auto& r : rows) {
        if (r.size() != d) throw ShapeError("PCA rows differ in dimension");
    }
    if (d == 0) {
        result.warning = "empty embeddings; projection skipped";
        return result;
    }

    auto sorted = rows;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    result.mean.assign(d, 0.0);
    for (const auto& r : sorted) {
        for (std::size_t i = 0; i < d; ++i) result.mean[i] += r[i];
    }
    for (auto& m : result.mean) m /= n;

    Matrix cov(d, std::vector<double>(d, 0.0));
    for (const auto& r : sorted) {
        for (std::size_t i = 0; i < d; ++i) {
            const double ci = r[i] - result.mean[i];
            for (std::size_t j = 0; j < d; ++j) cov[i][j] += ci * (r[j] - result.mean[j]);
        }
    }
    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) cov[i][j] /= (n - 1.0);
        trace += cov[i][i];
    }
    double scale = 0.0;
    for (const auto& r : sorted) {
        for (double x : r) scale = std::max(scale, std::abs(x));
    }
    const double tol = 1e-12 * std::max(1.0, scale * scale);
    if (trace <= tol) {
        result.warning = "embeddings have zero variance; projection skipped";
        return result;
    }

    for (std::size_t k = 0; k < std::min<std::size_t>(2, d); ++k) {
        auto [lambda, v] = power_iteration(cov);
        if (lambda <= tol) {
            lambda = 0.0;
            v = orthogonal_to(result.components, d);
        }
        fix_sign(v);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) cov[i][j] -= lambda * v[i] * v[j];
        }
        result.variances.push_back(lambda);
        result.components.push_back(std::move(v));
    }

    result.coordinates.reserve(rows.size());
    for (const auto& r : rows) {
        std::array<double, 2> p{0.0, 0.0};
        for (std::size_t k = 0; k < result.components.size(); ++k) {
            for (std::size_t i = 0; i < d; ++i) p[k] += (r[i] - result.mean[i]) * result.components[k][i];
        }
        result.coordinates.push_back(p);
    }
    result.projected = true;
    return result;
}

}  // namespace g4rl
