#ifndef VERISPARSE_BOUNDS_HPP
#define VERISPARSE_BOUNDS_HPP

#include <map>
#include <optional>
#include <vector>

#include "verisparse/decoder.hpp"
#include "verisparse/signal_domain.hpp"

namespace verisparse {

// Symbolic affine envelopes of one layer's neurons as functions of the
// network input x, valid on the queried subdomain:
//   wl x + bl  <=  layer(x)  <=  wu x + bu   (elementwise)
// Contributions of sign neurons are folded into the offsets (decided signs as
// constants, undecided ones at their worst case over {-1, +1}).
struct LinearBounds {
    Matrix wl, wu;
    std::vector<double> bl, bu;
    int target_layer = 0;  // 0..h-1: hidden pre-activations; h: output logits
};

// Concrete interval state carried through the branch-and-bound tree.
// sign_value folds explicit branch decisions with signs implied by the
// pre-activation intervals (+1 / -1 / 0 = undecided).
struct PreactivationBounds {
    std::vector<Interval> sign_pre;              // m2 bounds on A2 x - tau
    std::vector<int> sign_value;                 // m2
    std::vector<std::vector<Interval>> hidden;   // per layer, pre-activation
    std::vector<Interval> logits;                // n
};

// Nonnegative multipliers for decided sign constraints, keyed by sign index.
// Any feasible assignment yields a sound bound.
struct BetaState {
    std::map<int, double> beta;
};

struct BackwardBounds {
    LinearBounds linear;
    std::vector<Interval> concrete;
};

// Single-objective bound used by the verifier: a lower bound on z_i (or -z_i).
struct ObjectiveBound {
    double lb;
    AffineObjective folded;       // the concretized affine form (incl. beta terms)
    std::vector<double> argmin;   // minimizer of the folded form over the subdomain
};

// Intersects child bounds with the parent's. Returns false when some
// intersection is empty, which signals subdomain infeasibility (prune).
bool refine_with_parent(PreactivationBounds &child, const PreactivationBounds &parent);

// Bound computations for one fixed model. Precomputes the affine structure
// that does not depend on the subdomain.
class BoundEngine {
public:
    explicit BoundEngine(const Model &model);

    const Model &model() const { return *model_; }

    // Forward interval propagation. Input intervals are the exact
    // per-coordinate ranges over the subdomain; the joint L0 structure is
    // ignored beyond that. Sign neurons become [-1, 1] when their interval
    // arithmetic pre-activation straddles 0, else the constant.
    PreactivationBounds interval_bounds(const Subdomain &sub) const;

    // Backward linear relaxation bounds per layer, recomputed for the
    // subdomain, intersected with forward intervals and (when given) the
    // parent's bounds. nullopt signals an empty subdomain.
    std::optional<PreactivationBounds> compute_bounds(const Subdomain &sub,
                                                      const PreactivationBounds *parent) const;

    // Affine envelopes of one layer (target_layer as in LinearBounds) plus
    // concrete intervals, the latter already intersected with the interval
    // bounds in `pab` where available.
    BackwardBounds backward_bounds(const Subdomain &sub, const PreactivationBounds &pab,
                                   int target_layer, const BetaState *beta = nullptr) const;

    // Lower bound of z[coord] (negate = false) or -z[coord] (negate = true).
    ObjectiveBound logit_lower_bound(const Subdomain &sub, const PreactivationBounds &pab,
                                     int coord, bool negate,
                                     const BetaState *beta = nullptr) const;

    // Projected supergradient ascent on the sign-branch multipliers; the
    // returned bound is the best over all iterates, so it never falls below
    // the beta = 0 bound.
    std::pair<BetaState, double> optimize_beta(const Subdomain &sub,
                                               const PreactivationBounds &pab, int coord,
                                               bool negate, int steps = 20,
                                               double step_size = 0.1) const;

    // Exact range of each input coordinate over the subdomain.
    std::vector<Interval> input_intervals(const Subdomain &sub) const;

private:
    struct FormSet;  // affine forms over (x, sign outputs)

    FormSet backward_forms(int direction, int start_layer, const Matrix &c,
                           const std::vector<double> &c0,
                           const PreactivationBounds &pab) const;
    void accumulate_h0(const Matrix &g, FormSet &forms) const;
    double concretize_row(const FormSet &forms, int row, int direction, const Subdomain &sub,
                          const PreactivationBounds &pab, const BetaState *beta,
                          AffineObjective *folded_out, std::vector<double> *argmin_out) const;

    std::vector<Interval> sign_pre_intervals(const Subdomain &sub) const;

    const Model *model_;
    int n_, m1_, m2_, feat_;
    Matrix w0_sum_;  // layer-0 weight with the duplicated h0 halves merged
};

}  // namespace verisparse

#endif
