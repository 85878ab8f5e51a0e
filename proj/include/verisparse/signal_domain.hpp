#ifndef VERISPARSE_SIGNAL_DOMAIN_HPP
#define VERISPARSE_SIGNAL_DOMAIN_HPP

#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "verisparse/linalg.hpp"

namespace verisparse {

// Signals with exactly l nonzero coordinates, each nonzero in [eps, 1].
// Coordinates are 0-based throughout.
struct SparseDomainSpec {
    int n = 0;
    int l = 0;
    double eps = 0.5;

    void validate() const;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

// Raised when an operation is asked about an empty subdomain. Callers in the
// branch-and-bound loop treat this as a pruning signal, not a failure.
struct InfeasibleSubdomain : std::runtime_error {
    InfeasibleSubdomain() : std::runtime_error("infeasible subdomain") {}
};

// Branch-and-bound region. Coordinates below `frontier` are forced to zero
// unless listed in `on`; `on` coordinates are active with value in their box
// (default [eps, 1]); everything else is free (zero or in [eps, 1]).
// `forced_zero` pins coordinates to zero regardless of the frontier (used by
// the "off" property root). `sign_decisions` records branch decisions on
// binarized measurements: sign index -> +1/-1.
struct Subdomain {
    int frontier = 0;
    std::vector<int> on;           // sorted ascending
    std::vector<int> forced_zero;  // sorted ascending
    std::map<int, Interval> boxes;  // only populated once |on| == l
    std::map<int, int> sign_decisions;

    bool is_on(int i) const;
    bool is_forced_zero_extra(int i) const;
    // Zero by frontier position or by the explicit forced-zero set.
    bool is_zero(int i) const;
    Interval box(int i, double eps) const;  // [eps,1] unless overridden

    static Subdomain root() { return Subdomain{}; }
};

struct AffineObjective {
    std::vector<double> c;
    double c0 = 0.0;
};

// Coordinates that may still be switched on.
std::vector<int> free_coordinates(const SparseDomainSpec &spec, const Subdomain &sub);
// Number of coordinates left to include: l - |on|.
int support_budget(const SparseDomainSpec &spec, const Subdomain &sub);
bool feasible(const SparseDomainSpec &spec, const Subdomain &sub);

// Exact membership: exactly l coordinates in [eps, 1], the rest exactly zero.
bool contains(const SparseDomainSpec &spec, const std::vector<double> &x);

// Exact minimum of c.x + c0 over the subdomain. O(n log n) via sorting the
// per-coordinate inclusion contributions; compensated summation.
double concretize_min(const SparseDomainSpec &spec, const Subdomain &sub,
                      const AffineObjective &obj);
double concretize_max(const SparseDomainSpec &spec, const Subdomain &sub,
                      const AffineObjective &obj);

// As concretize_min, but also produces a minimizer (needed by the dual
// ascent on sign-branch multipliers).
double concretize_min_witness(const SparseDomainSpec &spec, const Subdomain &sub,
                              const AffineObjective &obj, std::vector<double> &argmin);

// Clip to [eps, 1], then keep the l largest post-clip entries (ties broken
// toward the lowest index) and zero the rest.
std::vector<double> project(const SparseDomainSpec &spec, const std::vector<double> &x_raw);

// Uniform support, each nonzero eps or 1 with probability 1/2.
std::vector<double> sample_corner(const SparseDomainSpec &spec, Rng &rng);

// Member of the subdomain: on-coordinates uniform in their boxes, a uniform
// (l - |on|)-subset of free coordinates uniform in [eps, 1], rest zero.
// Sign decisions are not consulted; see the verifier for why that is sound.
std::vector<double> sample_in_subdomain(const SparseDomainSpec &spec, const Subdomain &sub,
                                        Rng &rng);

// Support-extension split: one child per free coordinate k, fixing k active
// and everything before it (outside `on`) to zero. Pre: |on| < l.
std::vector<Subdomain> split(const SparseDomainSpec &spec, const Subdomain &sub);

// Box split for a fully fixed pattern: halve the widest on-coordinate box
// (ties toward the lowest index). Pre: |on| == l.
std::pair<Subdomain, Subdomain> split_fixed_pattern(const SparseDomainSpec &spec,
                                                    const Subdomain &sub);

// Number of sparsity patterns compatible with the subdomain:
// C(#free, l - |on|). Infeasible subdomains count zero.
uint64_t pattern_count(const SparseDomainSpec &spec, const Subdomain &sub);

}  // namespace verisparse

#endif
