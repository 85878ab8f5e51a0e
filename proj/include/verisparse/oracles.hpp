#ifndef VERISPARSE_ORACLES_HPP
#define VERISPARSE_ORACLES_HPP

#include <functional>
#include <optional>
#include <vector>

#include "verisparse/decoder.hpp"
#include "verisparse/signal_domain.hpp"

namespace verisparse {

// Lexicographic enumeration of all C(n, l) supports. Visits each exactly once.
class SupportEnumeration {
public:
    SupportEnumeration(int n, int l);
    // Returns false once all supports have been visited.
    bool next(std::vector<int> &support);

private:
    int n_;
    int l_;
    bool started_ = false;
    std::vector<int> current_;
};

// Exact minimum of the objective by enumerating every support compatible with
// the subdomain; per active coordinate the objective is separable, so the box
// endpoints are optimal. Ground truth for the O(n) concretizer.
// Pre: C(n, l) <= 10^6.
double brute_force_min(const SparseDomainSpec &spec, const Subdomain &sub,
                       const AffineObjective &obj);

enum class DecodeStatus { unique, ambiguous, inconsistent };

struct ExactDecodeResult {
    DecodeStatus status;
    std::vector<int> support;                 // valid when unique
    std::vector<double> x;                    // valid when unique
    std::vector<std::vector<int>> candidates;  // all accepting supports
};

// Enumerates supports, solves the least-squares restriction of A1 per support
// and accepts those with residual <= 1e-8 and values in [eps, 1]. Linear
// sensing only.
ExactDecodeResult exact_decode(const SensingSpec &sensing, const SparseDomainSpec &spec,
                               const std::vector<double> &y);

struct PropertyCheck {
    bool holds;
    std::vector<double> witness;  // violating input when !holds
};

// Checks predicate(x) over every support compatible with the premise and a
// per-coordinate value grid of grid_per_box + 1 points spanning [eps, 1]
// (so grid_per_box = 1 is pure corner checking). kind_on selects the
// x_i >= eps premise; otherwise x_i = 0. Necessary, not sufficient, for truth.
PropertyCheck exhaustive_verify(const SparseDomainSpec &spec, int coordinate, bool kind_on,
                                int grid_per_box,
                                const std::function<bool(const std::vector<double> &)> &violates);

// Convenience overload running a decoder model: violation is a wrongly signed
// logit at the property coordinate (z_i <= 0 for on, z_i >= 0 for off).
PropertyCheck exhaustive_verify(const Model &model, int coordinate, bool kind_on,
                                int grid_per_box);

}  // namespace verisparse

#endif
