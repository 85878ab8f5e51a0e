#include "verisparse/signal_domain.hpp"

#include <algorithm>
#include <cmath>

namespace verisparse {

void SparseDomainSpec::validate() const {
    if (n < 1) throw std::invalid_argument("SparseDomainSpec: n must be positive");
    if (l < 1 || l > n) throw std::invalid_argument("SparseDomainSpec: need 1 <= l <= n");
    if (!(eps > 0.0 && eps <= 1.0))
        throw std::invalid_argument("SparseDomainSpec: need 0 < eps <= 1");
}

bool Subdomain::is_on(int i) const {
    return std::binary_search(on.begin(), on.end(), i);
}

bool Subdomain::is_forced_zero_extra(int i) const {
    return std::binary_search(forced_zero.begin(), forced_zero.end(), i);
}

bool Subdomain::is_zero(int i) const {
    if (is_on(i)) return false;
    return i < frontier || is_forced_zero_extra(i);
}

Interval Subdomain::box(int i, double eps) const {
    auto it = boxes.find(i);
    if (it != boxes.end()) return it->second;
    return Interval{eps, 1.0};
}

std::vector<int> free_coordinates(const SparseDomainSpec &spec, const Subdomain &sub) {
    std::vector<int> free;
    for (int i = sub.frontier; i < spec.n; ++i) {
        if (!sub.is_on(i) && !sub.is_forced_zero_extra(i)) free.push_back(i);
    }
    return free;
}

int support_budget(const SparseDomainSpec &spec, const Subdomain &sub) {
    return spec.l - static_cast<int>(sub.on.size());
}

bool feasible(const SparseDomainSpec &spec, const Subdomain &sub) {
    int budget = support_budget(spec, sub);
    if (budget < 0) return false;
    return static_cast<int>(free_coordinates(spec, sub).size()) >= budget;
}

bool contains(const SparseDomainSpec &spec, const std::vector<double> &x) {
    if (static_cast<int>(x.size()) != spec.n)
        throw std::invalid_argument("contains: x has wrong dimension");
    int active = 0;
    for (double v : x) {
        if (v == 0.0) continue;
        if (v < spec.eps || v > 1.0) return false;
        ++active;
    }
    return active == spec.l;
}

namespace {

// Contribution of coordinate i to the minimum if it is active on [lo, hi].
inline double inclusion_min(double c, double lo, double hi) {
    return c >= 0.0 ? c * lo : c * hi;
}

struct ConcretizeParts {
    KahanSum mandatory;          // on-coordinates
    std::vector<double> alpha;   // free-coordinate inclusion contributions
    std::vector<int> free_idx;
};

ConcretizeParts concretize_parts(const SparseDomainSpec &spec, const Subdomain &sub,
                                 const AffineObjective &obj) {
    if (static_cast<int>(obj.c.size()) != spec.n)
        throw std::invalid_argument("concretize: objective has wrong dimension");
    if (!feasible(spec, sub)) throw InfeasibleSubdomain{};
    ConcretizeParts parts;
    for (int i : sub.on) {
        Interval b = sub.box(i, spec.eps);
        parts.mandatory.add(inclusion_min(obj.c[i], b.lo, b.hi));
    }
    parts.free_idx = free_coordinates(spec, sub);
    parts.alpha.reserve(parts.free_idx.size());
    for (int i : parts.free_idx)
        parts.alpha.push_back(inclusion_min(obj.c[i], spec.eps, 1.0));
    return parts;
}

}  // namespace

double concretize_min(const SparseDomainSpec &spec, const Subdomain &sub,
                      const AffineObjective &obj) {
    ConcretizeParts parts = concretize_parts(spec, sub, obj);
    int budget = support_budget(spec, sub);
    KahanSum total;
    total.add(obj.c0);
    total.add(parts.mandatory.value());
    if (budget > 0) {
        std::nth_element(parts.alpha.begin(), parts.alpha.begin() + (budget - 1),
                         parts.alpha.end());
        for (int i = 0; i < budget; ++i) total.add(parts.alpha[i]);
    }
    return total.value();
}

double concretize_max(const SparseDomainSpec &spec, const Subdomain &sub,
                      const AffineObjective &obj) {
    AffineObjective neg;
    neg.c.resize(obj.c.size());
    for (size_t i = 0; i < obj.c.size(); ++i) neg.c[i] = -obj.c[i];
    neg.c0 = -obj.c0;
    return -concretize_min(spec, sub, neg);
}

double concretize_min_witness(const SparseDomainSpec &spec, const Subdomain &sub,
                              const AffineObjective &obj, std::vector<double> &argmin) {
    ConcretizeParts parts = concretize_parts(spec, sub, obj);
    int budget = support_budget(spec, sub);

    argmin.assign(spec.n, 0.0);
    for (int i : sub.on) {
        Interval b = sub.box(i, spec.eps);
        argmin[i] = obj.c[i] >= 0.0 ? b.lo : b.hi;
    }

    // Deterministic selection: sort by (alpha, index).
    std::vector<int> order(parts.free_idx.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (parts.alpha[a] != parts.alpha[b]) return parts.alpha[a] < parts.alpha[b];
        return parts.free_idx[a] < parts.free_idx[b];
    });

    KahanSum total;
    total.add(obj.c0);
    total.add(parts.mandatory.value());
    for (int r = 0; r < budget; ++r) {
        int k = order[r];
        int coord = parts.free_idx[k];
        total.add(parts.alpha[k]);
        argmin[coord] = obj.c[coord] >= 0.0 ? spec.eps : 1.0;
    }
    return total.value();
}

std::vector<double> project(const SparseDomainSpec &spec, const std::vector<double> &x_raw) {
    if (static_cast<int>(x_raw.size()) != spec.n)
        throw std::invalid_argument("project: x has wrong dimension");
    std::vector<double> clipped(spec.n);
    for (int i = 0; i < spec.n; ++i)
        clipped[i] = std::min(1.0, std::max(spec.eps, x_raw[i]));

    // Rank by clipped value; ties prefer the larger pre-clip value, then the
    // lowest index. The secondary key keeps projection the identity on domain
    // members whose nonzeros sit exactly at eps (a zero also clips to eps).
    std::vector<int> order(spec.n);
    for (int i = 0; i < spec.n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (clipped[a] != clipped[b]) return clipped[a] > clipped[b];
        if (x_raw[a] != x_raw[b]) return x_raw[a] > x_raw[b];
        return a < b;
    });

    std::vector<double> out(spec.n, 0.0);
    for (int r = 0; r < spec.l; ++r) out[order[r]] = clipped[order[r]];
    return out;
}

std::vector<double> sample_corner(const SparseDomainSpec &spec, Rng &rng) {
    std::vector<double> x(spec.n, 0.0);
    for (int i : sample_subset(spec.n, spec.l, rng)) x[i] = rng.coin() ? 1.0 : spec.eps;
    return x;
}

std::vector<double> sample_in_subdomain(const SparseDomainSpec &spec, const Subdomain &sub,
                                        Rng &rng) {
    if (!feasible(spec, sub)) throw InfeasibleSubdomain{};
    std::vector<double> x(spec.n, 0.0);
    for (int i : sub.on) {
        Interval b = sub.box(i, spec.eps);
        x[i] = rng.uniform(b.lo, b.hi);
    }
    std::vector<int> free = free_coordinates(spec, sub);
    int budget = support_budget(spec, sub);
    std::vector<int> chosen = sample_subset(static_cast<int>(free.size()), budget, rng);
    for (int k : chosen) x[free[k]] = rng.uniform(spec.eps, 1.0);
    return x;
}

std::vector<Subdomain> split(const SparseDomainSpec &spec, const Subdomain &sub) {
    if (support_budget(spec, sub) <= 0)
        throw std::logic_error("split: support already fully fixed");
    std::vector<Subdomain> children;
    for (int k = sub.frontier; k < spec.n; ++k) {
        if (sub.is_on(k) || sub.is_forced_zero_extra(k)) continue;
        Subdomain child = sub;
        child.frontier = k + 1;
        child.on.insert(std::upper_bound(child.on.begin(), child.on.end(), k), k);
        if (feasible(spec, child)) children.push_back(std::move(child));
    }
    return children;
}

std::pair<Subdomain, Subdomain> split_fixed_pattern(const SparseDomainSpec &spec,
                                                    const Subdomain &sub) {
    if (support_budget(spec, sub) != 0)
        throw std::logic_error("split_fixed_pattern: support not fully fixed");
    int pick = -1;
    double widest = -1.0;
    for (int i : sub.on) {
        double w = sub.box(i, spec.eps).width();
        if (w > widest) {  // ties keep the lowest index (on is ascending)
            widest = w;
            pick = i;
        }
    }
    Interval b = sub.box(pick, spec.eps);
    double mid = 0.5 * (b.lo + b.hi);
    Subdomain lo_child = sub;
    Subdomain hi_child = sub;
    lo_child.boxes[pick] = Interval{b.lo, mid};
    hi_child.boxes[pick] = Interval{mid, b.hi};
    return {lo_child, hi_child};
}

uint64_t pattern_count(const SparseDomainSpec &spec, const Subdomain &sub) {
    int budget = support_budget(spec, sub);
    if (budget < 0) return 0;
    int free_count = static_cast<int>(free_coordinates(spec, sub).size());
    if (free_count < budget) return 0;
    return binomial(free_count, budget);
}

}  // namespace verisparse
