#include "verisparse/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace verisparse {

std::vector<double> matvec(const Matrix &m, const std::vector<double> &x) {
    if (static_cast<int>(x.size()) != m.cols())
        throw std::invalid_argument("matvec: dimension mismatch");
    std::vector<double> y(m.rows(), 0.0);
    for (int r = 0; r < m.rows(); ++r) {
        const double *row = m.row(r);
        double acc = 0.0;
        for (int c = 0; c < m.cols(); ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

std::vector<double> matvec_t(const Matrix &m, const std::vector<double> &x) {
    if (static_cast<int>(x.size()) != m.rows())
        throw std::invalid_argument("matvec_t: dimension mismatch");
    std::vector<double> y(m.cols(), 0.0);
    for (int r = 0; r < m.rows(); ++r) {
        const double *row = m.row(r);
        double xr = x[r];
        for (int c = 0; c < m.cols(); ++c) y[c] += row[c] * xr;
    }
    return y;
}

double dot(const std::vector<double> &a, const std::vector<double> &b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double kahan_sum(const std::vector<double> &v) {
    KahanSum s;
    for (double x : v) s.add(x);
    return s.value();
}

std::vector<double> solve_linear(Matrix a, std::vector<double> b) {
    const int n = a.rows();
    if (a.cols() != n || static_cast<int>(b.size()) != n)
        throw std::invalid_argument("solve_linear: shape mismatch");
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::fabs(a(k, k));
        for (int r = k + 1; r < n; ++r) {
            double v = std::fabs(a(r, k));
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best < 1e-13) throw std::runtime_error("solve_linear: singular matrix");
        if (piv != k) {
            for (int c = k; c < n; ++c) std::swap(a(k, c), a(piv, c));
            std::swap(b[k], b[piv]);
        }
        for (int r = k + 1; r < n; ++r) {
            double f = a(r, k) / a(k, k);
            if (f == 0.0) continue;
            for (int c = k; c < n; ++c) a(r, c) -= f * a(k, c);
            b[r] -= f * b[k];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < n; ++c) acc -= a(r, c) * x[c];
        x[r] = acc / a(r, r);
    }
    return x;
}

std::vector<double> solve_least_squares(const Matrix &a, const std::vector<double> &b) {
    if (static_cast<int>(b.size()) != a.rows())
        throw std::invalid_argument("solve_least_squares: shape mismatch");
    const int k = a.cols();
    Matrix ata(k, k);
    std::vector<double> atb(k, 0.0);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            double acc = 0.0;
            for (int r = 0; r < a.rows(); ++r) acc += a(r, i) * a(r, j);
            ata(i, j) = acc;
        }
        double acc = 0.0;
        for (int r = 0; r < a.rows(); ++r) acc += a(r, i) * b[r];
        atb[i] = acc;
    }
    // Tiny ridge keeps near-rank-deficient supports solvable; residual checks
    // downstream reject bad fits anyway.
    for (int i = 0; i < k; ++i) ata(i, i) += 1e-12;
    return solve_linear(ata, atb);
}

bool all_finite(const std::vector<double> &v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

bool all_finite(const Matrix &m) { return all_finite(m.data()); }

uint64_t Rng::splitmix() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint64_t Rng::next_u64() { return splitmix(); }

double Rng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int Rng::uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    // Rejection sampling for exact uniformity.
    uint64_t un = static_cast<uint64_t>(n);
    uint64_t limit = std::numeric_limits<uint64_t>::max() - std::numeric_limits<uint64_t>::max() % un;
    uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return static_cast<int>(v % un);
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1, u2;
    do {
        u1 = uniform01();
    } while (u1 <= 0.0);
    u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

uint64_t Rng::derive_seed(uint64_t base, uint64_t salt) {
    uint64_t z = base ^ (0x9e3779b97f4a7c15ULL + (salt << 6) + (salt >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<int> sample_subset(int n, int k, Rng &rng) {
    if (k < 0 || k > n) throw std::invalid_argument("sample_subset: k out of range");
    // Partial Fisher-Yates.
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < k; ++i) {
        int j = i + rng.uniform_int(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    unsigned __int128 r = 1;
    for (int i = 1; i <= k; ++i) {
        r = r * static_cast<unsigned>(n - k + i);
        r /= static_cast<unsigned>(i);
        if (r > std::numeric_limits<uint64_t>::max())
            throw std::overflow_error("binomial: result exceeds 64 bits");
    }
    return static_cast<uint64_t>(r);
}

}  // namespace verisparse
