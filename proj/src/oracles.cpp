#include "verisparse/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace verisparse {

SupportEnumeration::SupportEnumeration(int n, int l) : n_(n), l_(l) {
    if (l < 0 || l > n) throw std::invalid_argument("SupportEnumeration: bad l");
}

bool SupportEnumeration::next(std::vector<int> &support) {
    if (!started_) {
        started_ = true;
        current_.resize(l_);
        for (int i = 0; i < l_; ++i) current_[i] = i;
        support = current_;
        return true;
    }
    // Advance the rightmost index that can still move.
    int i = l_ - 1;
    while (i >= 0 && current_[i] == n_ - l_ + i) --i;
    if (i < 0) return false;
    ++current_[i];
    for (int j = i + 1; j < l_; ++j) current_[j] = current_[j - 1] + 1;
    support = current_;
    return true;
}

double brute_force_min(const SparseDomainSpec &spec, const Subdomain &sub,
                       const AffineObjective &obj) {
    spec.validate();
    if (static_cast<int>(obj.c.size()) != spec.n)
        throw std::invalid_argument("brute_force_min: objective dimension mismatch");
    if (binomial(spec.n, spec.l) > 1000000ULL)
        throw std::invalid_argument("brute_force_min: combinatorial limit exceeded");
    if (!feasible(spec, sub)) throw InfeasibleSubdomain{};

    double best = std::numeric_limits<double>::infinity();
    SupportEnumeration en(spec.n, spec.l);
    std::vector<int> support;
    while (en.next(support)) {
        bool compatible = true;
        for (int i : sub.on) {
            if (!std::binary_search(support.begin(), support.end(), i)) {
                compatible = false;
                break;
            }
        }
        if (compatible) {
            for (int i : support) {
                if (sub.is_zero(i)) {
                    compatible = false;
                    break;
                }
            }
        }
        if (!compatible) continue;
        double value = obj.c0;
        for (int i : support) {
            Interval b = sub.is_on(i) ? sub.box(i, spec.eps) : Interval{spec.eps, 1.0};
            value += std::min(obj.c[i] * b.lo, obj.c[i] * b.hi);
        }
        best = std::min(best, value);
    }
    return best;
}

ExactDecodeResult exact_decode(const SensingSpec &sensing, const SparseDomainSpec &spec,
                               const std::vector<double> &y) {
    if (sensing.m2() != 0)
        throw std::invalid_argument("exact_decode: linear sensing only");
    if (static_cast<int>(y.size()) != sensing.m1())
        throw std::invalid_argument("exact_decode: measurement length mismatch");

    ExactDecodeResult result;
    result.status = DecodeStatus::inconsistent;
    const double kResidualTol = 1e-8;
    const double kBoxSlack = 1e-9;

    SupportEnumeration en(spec.n, spec.l);
    std::vector<int> support;
    if (sensing.m1() == 0) {
        // No measurements: every support is consistent (any in-box values fit).
        while (en.next(support)) result.candidates.push_back(support);
        result.status = DecodeStatus::ambiguous;
        return result;
    }
    while (en.next(support)) {
        Matrix restricted(sensing.m1(), spec.l);
        for (int r = 0; r < sensing.m1(); ++r)
            for (int k = 0; k < spec.l; ++k) restricted(r, k) = sensing.a1(r, support[k]);
        std::vector<double> coeffs;
        try {
            coeffs = solve_least_squares(restricted, y);
        } catch (const std::runtime_error &) {
            continue;  // rank-deficient restriction, cannot accept
        }
        double residual = 0.0;
        for (int r = 0; r < sensing.m1(); ++r) {
            double fit = 0.0;
            for (int k = 0; k < spec.l; ++k) fit += restricted(r, k) * coeffs[k];
            residual += (fit - y[r]) * (fit - y[r]);
        }
        if (std::sqrt(residual) > kResidualTol) continue;
        bool in_box = true;
        for (double v : coeffs)
            if (v < spec.eps - kBoxSlack || v > 1.0 + kBoxSlack) in_box = false;
        if (!in_box) continue;
        result.candidates.push_back(support);
        if (result.candidates.size() == 1) {
            result.support = support;
            result.x.assign(spec.n, 0.0);
            for (int k = 0; k < spec.l; ++k) result.x[support[k]] = coeffs[k];
        }
    }

    if (result.candidates.empty()) {
        result.status = DecodeStatus::inconsistent;
    } else if (result.candidates.size() == 1) {
        result.status = DecodeStatus::unique;
    } else {
        result.status = DecodeStatus::ambiguous;
        result.support.clear();
        result.x.clear();
    }
    return result;
}

PropertyCheck exhaustive_verify(const SparseDomainSpec &spec, int coordinate, bool kind_on,
                                int grid_per_box,
                                const std::function<bool(const std::vector<double> &)> &violates) {
    if (grid_per_box < 1) throw std::invalid_argument("exhaustive_verify: grid_per_box >= 1");
    int points = grid_per_box + 1;
    double work = static_cast<double>(binomial(spec.n, spec.l)) * std::pow(points, spec.l);
    if (work > 1e7) throw std::invalid_argument("exhaustive_verify: combinatorial limit exceeded");

    std::vector<double> values(points);
    for (int g = 0; g < points; ++g)
        values[g] = spec.eps + (1.0 - spec.eps) * g / (points - 1);
    values.front() = spec.eps;
    values.back() = 1.0;
    if (spec.eps == 1.0) values = {1.0};  // all grid points coincide

    SupportEnumeration en(spec.n, spec.l);
    std::vector<int> support;
    std::vector<double> x(spec.n, 0.0);
    while (en.next(support)) {
        bool has = std::binary_search(support.begin(), support.end(), coordinate);
        if (kind_on != has) continue;
        // Odometer over the value grid for the active coordinates.
        std::vector<int> digit(spec.l, 0);
        while (true) {
            std::fill(x.begin(), x.end(), 0.0);
            for (int k = 0; k < spec.l; ++k) x[support[k]] = values[digit[k]];
            if (violates(x)) return PropertyCheck{false, x};
            int k = 0;
            while (k < spec.l && ++digit[k] == static_cast<int>(values.size())) {
                digit[k] = 0;
                ++k;
            }
            if (k == spec.l) break;
        }
    }
    return PropertyCheck{true, {}};
}

PropertyCheck exhaustive_verify(const Model &model, int coordinate, bool kind_on,
                                int grid_per_box) {
    auto violates = [&](const std::vector<double> &x) {
        ForwardTrace trace = forward(model.params, model.sensing, x);
        double zi = trace.z[coordinate];
        return kind_on ? zi <= 0.0 : zi >= 0.0;
    };
    return exhaustive_verify(model.domain, coordinate, kind_on, grid_per_box, violates);
}

}  // namespace verisparse
