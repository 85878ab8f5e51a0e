#include "verisparse/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace verisparse {

namespace {

constexpr int kLower = 0;
constexpr int kUpper = 1;

// Slack for interval intersections: a gap smaller than this is rounding
// noise, not genuine emptiness, and must not prune a live region.
constexpr double kEmptyTol = 1e-9;

Matrix mul(const Matrix &a, const Matrix &b) {
    if (a.cols() != b.rows()) throw std::logic_error("mul: shape mismatch");
    Matrix out(a.rows(), b.cols());
    for (int r = 0; r < a.rows(); ++r) {
        for (int k = 0; k < a.cols(); ++k) {
            double v = a(r, k);
            if (v == 0.0) continue;
            const double *brow = b.row(k);
            double *orow = out.row(r);
            for (int c = 0; c < b.cols(); ++c) orow[c] += v * brow[c];
        }
    }
    return out;
}

bool intersect_into(Interval &dst, const Interval &src) {
    dst.lo = std::max(dst.lo, src.lo);
    dst.hi = std::min(dst.hi, src.hi);
    if (dst.lo > dst.hi + kEmptyTol) return false;
    if (dst.lo > dst.hi) dst.lo = dst.hi = 0.5 * (dst.lo + dst.hi);
    return true;
}

std::vector<Interval> affine_interval(const Matrix &w, const std::vector<double> &b,
                                      const std::vector<Interval> &in) {
    std::vector<Interval> out(w.rows());
    for (int r = 0; r < w.rows(); ++r) {
        KahanSum lo, hi;
        if (!b.empty()) {
            lo.add(b[r]);
            hi.add(b[r]);
        }
        const double *row = w.row(r);
        for (int c = 0; c < w.cols(); ++c) {
            double v = row[c];
            if (v >= 0.0) {
                lo.add(v * in[c].lo);
                hi.add(v * in[c].hi);
            } else {
                lo.add(v * in[c].hi);
                hi.add(v * in[c].lo);
            }
        }
        out[r] = Interval{lo.value(), hi.value()};
    }
    return out;
}

std::vector<Interval> relu_interval(const std::vector<Interval> &in) {
    std::vector<Interval> out(in.size());
    for (size_t i = 0; i < in.size(); ++i)
        out[i] = Interval{std::max(0.0, in[i].lo), std::max(0.0, in[i].hi)};
    return out;
}

}  // namespace

struct BoundEngine::FormSet {
    Matrix x;                  // rows x n
    Matrix sig;                // rows x m2
    std::vector<double> off;   // rows
    int rows = 0;
};

BoundEngine::BoundEngine(const Model &model) : model_(&model) {
    model.validate();
    n_ = model.domain.n;
    m1_ = model.sensing.m1();
    m2_ = model.sensing.m2();
    feat_ = model.params.feature_dim(model.sensing.m());
    if (model.params.depth() > 0) {
        // Layer 0 reads [h0; h0]; merge the duplicated halves once.
        const Matrix &w0 = model.params.hidden[0].w;
        w0_sum_ = Matrix(w0.rows(), feat_);
        for (int r = 0; r < w0.rows(); ++r)
            for (int c = 0; c < feat_; ++c) w0_sum_(r, c) = w0(r, c) + w0(r, c + feat_);
    }
}

void BoundEngine::accumulate_h0(const Matrix &g, FormSet &forms) const {
    const int scales = model_->params.num_scales();
    const std::vector<double> &s = model_->params.scales;
    for (int r = 0; r < g.rows(); ++r) {
        for (int j = 0; j < m1_ + m2_; ++j) {
            double cy = 0.0;
            for (int k = 0; k < scales; ++k) cy += g(r, j * scales + k) * s[k];
            if (cy == 0.0) continue;
            if (j < m1_) {
                const double *a1row = model_->sensing.a1.row(j);
                double *xrow = forms.x.row(r);
                for (int i = 0; i < n_; ++i) xrow[i] += cy * a1row[i];
            } else {
                forms.sig(r, j - m1_) += cy;
            }
        }
    }
}

BoundEngine::FormSet BoundEngine::backward_forms(int direction, int start_layer,
                                                 const Matrix &c,
                                                 const std::vector<double> &c0,
                                                 const PreactivationBounds &pab) const {
    const DecoderParams &params = model_->params;
    const int depth = params.depth();
    const int rows = c.rows();
    // Relaxation below the target needs bounds for every lower ReLU layer.
    for (int s = 0; s < std::min(start_layer, depth); ++s) {
        if (static_cast<int>(pab.hidden.size()) <= s ||
            pab.hidden[s].size() != static_cast<size_t>(params.hidden[s].w.rows()))
            throw std::logic_error("backward_forms: missing pre-activation bounds");
    }
    if (m2_ > 0 && static_cast<int>(pab.sign_value.size()) != m2_)
        throw std::logic_error("backward_forms: missing sign-neuron state");

    FormSet forms;
    forms.rows = rows;
    forms.x = Matrix(rows, n_);
    forms.sig = Matrix(rows, std::max(1, m2_));
    forms.off.assign(rows, 0.0);
    if (!c0.empty())
        for (int r = 0; r < rows; ++r) forms.off[r] = c0[r];

    Matrix cur;       // coefficients over the post-activations of layer `level`
    int level = -1;   // -1: everything already accumulated into (x, sig)

    auto add_bias = [&](const Matrix &coef, const std::vector<double> &b) {
        for (int r = 0; r < coef.rows(); ++r) {
            double acc = 0.0;
            for (int k = 0; k < coef.cols(); ++k) acc += coef(r, k) * b[k];
            forms.off[r] += acc;
        }
    };

    if (start_layer == depth) {
        // Output logits target.
        Matrix g = mul(c, params.output.w);
        add_bias(c, params.output.b);
        if (depth == 0) {
            accumulate_h0(g, forms);
            return forms;
        }
        cur = std::move(g);
        level = depth - 1;
    } else {
        // Pre-activation target at hidden layer start_layer.
        const Layer &lay = params.hidden[start_layer];
        add_bias(c, lay.b);
        if (start_layer == 0) {
            accumulate_h0(mul(c, w0_sum_), forms);
            return forms;
        }
        int prev_width = params.hidden[start_layer - 1].w.rows();
        Matrix left(lay.w.rows(), prev_width), right(lay.w.rows(), feat_);
        for (int r = 0; r < lay.w.rows(); ++r) {
            for (int k = 0; k < prev_width; ++k) left(r, k) = lay.w(r, k);
            for (int k = 0; k < feat_; ++k) right(r, k) = lay.w(r, prev_width + k);
        }
        accumulate_h0(mul(c, right), forms);
        cur = mul(c, left);
        level = start_layer - 1;
    }

    // Walk down through ReLU layers, relaxing each and substituting its
    // affine map until only (x, sign) coefficients remain.
    while (level >= 0) {
        const std::vector<Interval> &bounds = pab.hidden[level];
        const Layer &lay = params.hidden[level];
        Matrix pre(rows, lay.w.rows());
        for (int r = 0; r < rows; ++r) {
            for (int q = 0; q < static_cast<int>(bounds.size()); ++q) {
                double w = cur(r, q);
                if (w == 0.0) continue;
                double lo = bounds[q].lo, hi = bounds[q].hi;
                if (hi <= 0.0) continue;  // dead neuron
                if (lo >= 0.0) {          // always active
                    pre(r, q) += w;
                    continue;
                }
                double upper_slope = hi / (hi - lo);
                double upper_icpt = -lo * hi / (hi - lo);
                double lower_slope = (hi >= -lo) ? 1.0 : 0.0;
                bool use_lower_env = (direction == kLower) == (w >= 0.0);
                if (use_lower_env) {
                    pre(r, q) += w * lower_slope;
                } else {
                    pre(r, q) += w * upper_slope;
                    forms.off[r] += w * upper_icpt;
                }
            }
        }
        add_bias(pre, lay.b);
        if (level == 0) {
            accumulate_h0(mul(pre, w0_sum_), forms);
        } else {
            int prev_width = params.hidden[level - 1].w.rows();
            Matrix left(lay.w.rows(), prev_width), right(lay.w.rows(), feat_);
            for (int r = 0; r < lay.w.rows(); ++r) {
                for (int k = 0; k < prev_width; ++k) left(r, k) = lay.w(r, k);
                for (int k = 0; k < feat_; ++k) right(r, k) = lay.w(r, prev_width + k);
            }
            accumulate_h0(mul(pre, right), forms);
            cur = mul(pre, left);
        }
        --level;
    }
    return forms;
}

double BoundEngine::concretize_row(const FormSet &forms, int row, int direction,
                                   const Subdomain &sub, const PreactivationBounds &pab,
                                   const BetaState *beta, AffineObjective *folded_out,
                                   std::vector<double> *argmin_out) const {
    AffineObjective aff;
    aff.c.assign(forms.x.row(row), forms.x.row(row) + n_);
    aff.c0 = forms.off[row];

    // Fold sign-neuron contributions: decided signs substitute their
    // constant, undecided ones take the worst case over {-1, +1}.
    for (int j = 0; j < m2_; ++j) {
        double d = forms.sig(row, j);
        if (d == 0.0) continue;
        int sv = pab.sign_value[j];
        if (sv != 0) {
            aff.c0 += d * sv;
        } else {
            aff.c0 += direction == kLower ? -std::fabs(d) : std::fabs(d);
        }
    }

    // Lagrangian terms for decided sign constraints g_j(x) = s*(a2_j x - tau_j) >= 0:
    // subtract beta*g for lower bounds, add it for upper bounds.
    if (beta) {
        const Matrix &a2 = *model_->sensing.a2;
        for (const auto &[j, b] : beta->beta) {
            if (b == 0.0) continue;
            auto it = sub.sign_decisions.find(j);
            if (it == sub.sign_decisions.end()) continue;
            double factor = (direction == kLower ? -b : b) * it->second;
            const double *a2row = a2.row(j);
            for (int i = 0; i < n_; ++i) aff.c[i] += factor * a2row[i];
            aff.c0 -= factor * model_->sensing.tau[j];
        }
    }

    double value;
    if (direction == kLower) {
        if (argmin_out) {
            value = concretize_min_witness(model_->domain, sub, aff, *argmin_out);
        } else {
            value = concretize_min(model_->domain, sub, aff);
        }
    } else {
        value = concretize_max(model_->domain, sub, aff);
    }
    if (folded_out) *folded_out = std::move(aff);
    return value;
}

std::vector<Interval> BoundEngine::input_intervals(const Subdomain &sub) const {
    const SparseDomainSpec &spec = model_->domain;
    if (!feasible(spec, sub)) throw InfeasibleSubdomain{};
    int budget = support_budget(spec, sub);
    int free_count = static_cast<int>(free_coordinates(spec, sub).size());
    std::vector<Interval> iv(spec.n);
    for (int i = 0; i < spec.n; ++i) {
        if (sub.is_on(i)) {
            iv[i] = sub.box(i, spec.eps);
        } else if (sub.is_zero(i)) {
            iv[i] = Interval{0.0, 0.0};
        } else {
            // Matches concretize_min/max applied to the coordinate functional.
            iv[i] = Interval{budget == free_count ? spec.eps : 0.0, budget > 0 ? 1.0 : 0.0};
        }
    }
    return iv;
}

std::vector<Interval> BoundEngine::sign_pre_intervals(const Subdomain &sub) const {
    std::vector<Interval> out(m2_);
    for (int j = 0; j < m2_; ++j) {
        AffineObjective aff;
        aff.c.assign(model_->sensing.a2->row(j), model_->sensing.a2->row(j) + n_);
        aff.c0 = -model_->sensing.tau[j];
        out[j] = Interval{concretize_min(model_->domain, sub, aff),
                          concretize_max(model_->domain, sub, aff)};
    }
    return out;
}

namespace {

// Applies an explicit branch decision to a sign pre-activation interval.
// Returns false when the decision contradicts the interval (empty region).
bool apply_sign_decision(Interval &iv, int decision) {
    if (decision > 0) {
        iv.lo = std::max(iv.lo, 0.0);
    } else {
        if (iv.lo >= 0.0) return false;  // sign would be +1 everywhere
        iv.hi = std::min(iv.hi, 0.0);
    }
    return iv.lo <= iv.hi + kEmptyTol;
}

int implied_sign(const Interval &iv) {
    if (iv.lo >= 0.0) return 1;
    if (iv.hi < 0.0) return -1;
    return 0;
}

}  // namespace

PreactivationBounds BoundEngine::interval_bounds(const Subdomain &sub) const {
    const DecoderParams &params = model_->params;
    std::vector<Interval> x_iv = input_intervals(sub);

    PreactivationBounds pab;
    pab.sign_pre.resize(m2_);
    pab.sign_value.resize(m2_, 0);
    if (m2_ > 0) {
        std::vector<Interval> p = affine_interval(*model_->sensing.a2, {}, x_iv);
        for (int j = 0; j < m2_; ++j) {
            p[j].lo -= model_->sensing.tau[j];
            p[j].hi -= model_->sensing.tau[j];
            auto it = sub.sign_decisions.find(j);
            if (it != sub.sign_decisions.end()) {
                apply_sign_decision(p[j], it->second);
                pab.sign_value[j] = it->second;
            } else {
                pab.sign_value[j] = implied_sign(p[j]);
            }
            pab.sign_pre[j] = p[j];
        }
    }

    // Measurement vector intervals: linear block then sign outputs.
    std::vector<Interval> y = affine_interval(model_->sensing.a1, {}, x_iv);
    for (int j = 0; j < m2_; ++j) {
        int sv = pab.sign_value[j];
        y.push_back(sv != 0 ? Interval{static_cast<double>(sv), static_cast<double>(sv)}
                            : Interval{-1.0, 1.0});
    }

    std::vector<Interval> h0(feat_);
    {
        int idx = 0;
        for (const Interval &yj : y) {
            for (double s : params.scales) {
                h0[idx++] = s >= 0.0 ? Interval{s * yj.lo, s * yj.hi}
                                     : Interval{s * yj.hi, s * yj.lo};
            }
        }
    }

    pab.hidden.resize(params.depth());
    std::vector<Interval> post = h0;
    for (int t = 0; t < params.depth(); ++t) {
        std::vector<Interval> in = post;
        in.insert(in.end(), h0.begin(), h0.end());
        pab.hidden[t] = affine_interval(params.hidden[t].w, params.hidden[t].b, in);
        post = relu_interval(pab.hidden[t]);
    }
    pab.logits = affine_interval(params.output.w, params.output.b, post);
    return pab;
}

bool refine_with_parent(PreactivationBounds &child, const PreactivationBounds &parent) {
    if (parent.hidden.size() != child.hidden.size() ||
        parent.sign_pre.size() != child.sign_pre.size())
        throw std::invalid_argument("refine_with_parent: shape mismatch");
    for (size_t j = 0; j < child.sign_pre.size(); ++j)
        if (!intersect_into(child.sign_pre[j], parent.sign_pre[j])) return false;
    for (size_t t = 0; t < child.hidden.size(); ++t)
        for (size_t q = 0; q < child.hidden[t].size(); ++q)
            if (!intersect_into(child.hidden[t][q], parent.hidden[t][q])) return false;
    if (child.logits.size() == parent.logits.size())
        for (size_t i = 0; i < child.logits.size(); ++i)
            if (!intersect_into(child.logits[i], parent.logits[i])) return false;
    return true;
}

std::optional<PreactivationBounds> BoundEngine::compute_bounds(
    const Subdomain &sub, const PreactivationBounds *parent) const {
    const DecoderParams &params = model_->params;
    const SparseDomainSpec &spec = model_->domain;
    if (!feasible(spec, sub)) return std::nullopt;

    PreactivationBounds pab;
    pab.sign_pre = sign_pre_intervals(sub);
    pab.sign_value.assign(m2_, 0);
    for (int j = 0; j < m2_; ++j) {
        auto it = sub.sign_decisions.find(j);
        if (it != sub.sign_decisions.end()) {
            if (!apply_sign_decision(pab.sign_pre[j], it->second)) return std::nullopt;
            pab.sign_value[j] = it->second;
        }
    }
    if (parent) {
        for (int j = 0; j < m2_; ++j)
            if (!intersect_into(pab.sign_pre[j], parent->sign_pre[j])) return std::nullopt;
    }
    for (int j = 0; j < m2_; ++j) {
        if (pab.sign_value[j] == 0) pab.sign_value[j] = implied_sign(pab.sign_pre[j]);
        // An explicit decision contradicted by the refined interval means the
        // region is empty.
        auto it = sub.sign_decisions.find(j);
        if (it != sub.sign_decisions.end()) {
            int implied = implied_sign(pab.sign_pre[j]);
            if (implied != 0 && implied != it->second) return std::nullopt;
        }
    }

    // Interval scaffolding reused by the per-layer backward passes.
    std::vector<Interval> x_iv = input_intervals(sub);
    std::vector<Interval> y = affine_interval(model_->sensing.a1, {}, x_iv);
    for (int j = 0; j < m2_; ++j) {
        int sv = pab.sign_value[j];
        y.push_back(sv != 0 ? Interval{static_cast<double>(sv), static_cast<double>(sv)}
                            : Interval{-1.0, 1.0});
    }
    std::vector<Interval> h0(feat_);
    {
        int idx = 0;
        for (const Interval &yj : y)
            for (double s : params.scales)
                h0[idx++] = s >= 0.0 ? Interval{s * yj.lo, s * yj.hi}
                                     : Interval{s * yj.hi, s * yj.lo};
    }

    pab.hidden.resize(params.depth());
    std::vector<Interval> post = h0;
    for (int t = 0; t < params.depth(); ++t) {
        std::vector<Interval> in = post;
        in.insert(in.end(), h0.begin(), h0.end());
        std::vector<Interval> bounds = affine_interval(params.hidden[t].w, params.hidden[t].b, in);
        if (parent) {
            for (size_t q = 0; q < bounds.size(); ++q)
                if (!intersect_into(bounds[q], parent->hidden[t][q])) return std::nullopt;
        }
        pab.hidden[t] = bounds;  // backward pass below needs layers < t only

        int width = params.hidden[t].w.rows();
        Matrix identity(width, width);
        for (int q = 0; q < width; ++q) identity(q, q) = 1.0;
        FormSet lower = backward_forms(kLower, t, identity, {}, pab);
        FormSet upper = backward_forms(kUpper, t, identity, {}, pab);
        for (int q = 0; q < width; ++q) {
            Interval crown{concretize_row(lower, q, kLower, sub, pab, nullptr, nullptr, nullptr),
                           concretize_row(upper, q, kUpper, sub, pab, nullptr, nullptr, nullptr)};
            if (!intersect_into(bounds[q], crown)) return std::nullopt;
        }
        pab.hidden[t] = std::move(bounds);
        post = relu_interval(pab.hidden[t]);
    }

    pab.logits = affine_interval(params.output.w, params.output.b, post);
    if (parent && parent->logits.size() == pab.logits.size()) {
        for (size_t i = 0; i < pab.logits.size(); ++i)
            if (!intersect_into(pab.logits[i], parent->logits[i])) return std::nullopt;
    }
    return pab;
}

BackwardBounds BoundEngine::backward_bounds(const Subdomain &sub,
                                            const PreactivationBounds &pab, int target_layer,
                                            const BetaState *beta) const {
    const DecoderParams &params = model_->params;
    const int depth = params.depth();
    if (target_layer < 0 || target_layer > depth)
        throw std::invalid_argument("backward_bounds: bad target layer");
    int rows = target_layer == depth ? n_ : params.hidden[target_layer].w.rows();
    Matrix identity(rows, rows);
    for (int r = 0; r < rows; ++r) identity(r, r) = 1.0;

    FormSet lower = backward_forms(kLower, target_layer, identity, {}, pab);
    FormSet upper = backward_forms(kUpper, target_layer, identity, {}, pab);

    BackwardBounds out;
    out.linear.target_layer = target_layer;
    out.linear.wl = Matrix(rows, n_);
    out.linear.wu = Matrix(rows, n_);
    out.linear.bl.resize(rows);
    out.linear.bu.resize(rows);
    out.concrete.resize(rows);

    const std::vector<Interval> *iv =
        target_layer == depth
            ? (pab.logits.empty() ? nullptr : &pab.logits)
            : (pab.hidden.empty() ? nullptr : &pab.hidden[target_layer]);

    for (int r = 0; r < rows; ++r) {
        AffineObjective fl, fu;
        double lb = concretize_row(lower, r, kLower, sub, pab, beta, &fl, nullptr);
        double ub = concretize_row(upper, r, kUpper, sub, pab, beta, &fu, nullptr);
        for (int i = 0; i < n_; ++i) {
            out.linear.wl(r, i) = fl.c[i];
            out.linear.wu(r, i) = fu.c[i];
        }
        out.linear.bl[r] = fl.c0;
        out.linear.bu[r] = fu.c0;
        // Concrete values take the tighter of the backward and interval paths.
        if (iv) {
            lb = std::max(lb, (*iv)[r].lo);
            ub = std::min(ub, (*iv)[r].hi);
        }
        out.concrete[r] = Interval{lb, ub};
    }
    return out;
}

ObjectiveBound BoundEngine::logit_lower_bound(const Subdomain &sub,
                                              const PreactivationBounds &pab, int coord,
                                              bool negate, const BetaState *beta) const {
    Matrix c(1, n_);
    c(0, coord) = negate ? -1.0 : 1.0;
    FormSet forms = backward_forms(kLower, model_->params.depth(), c, {}, pab);
    ObjectiveBound out;
    out.lb = concretize_row(forms, 0, kLower, sub, pab, beta, &out.folded, &out.argmin);
    if (!pab.logits.empty()) {
        double interval_lb = negate ? -pab.logits[coord].hi : pab.logits[coord].lo;
        out.lb = std::max(out.lb, interval_lb);
    }
    return out;
}

std::pair<BetaState, double> BoundEngine::optimize_beta(const Subdomain &sub,
                                                        const PreactivationBounds &pab,
                                                        int coord, bool negate, int steps,
                                                        double step_size) const {
    Matrix c(1, n_);
    c(0, coord) = negate ? -1.0 : 1.0;
    FormSet forms = backward_forms(kLower, model_->params.depth(), c, {}, pab);

    double interval_lb = pab.logits.empty()
                             ? -std::numeric_limits<double>::infinity()
                             : (negate ? -pab.logits[coord].hi : pab.logits[coord].lo);

    BetaState beta;
    for (const auto &[j, s] : sub.sign_decisions) beta.beta[j] = 0.0;

    BetaState best = beta;
    double best_lb = -std::numeric_limits<double>::infinity();
    std::vector<double> argmin;

    int iterations = beta.beta.empty() ? 1 : steps;
    for (int it = 0; it < iterations; ++it) {
        double lb = concretize_row(forms, 0, kLower, sub, pab, &beta, nullptr, &argmin);
        if (lb > best_lb) {
            best_lb = lb;
            best = beta;
        }
        if (beta.beta.empty()) break;
        // Supergradient of the concretized Lagrangian w.r.t. beta_j is
        // -g_j(x*) at the current minimizer; normalize by the constraint
        // magnitude so the step size is scale free.
        for (auto &[j, bj] : beta.beta) {
            int sgn = sub.sign_decisions.at(j);
            double pj = -model_->sensing.tau[j];
            const double *a2row = model_->sensing.a2->row(j);
            for (int i = 0; i < n_; ++i) pj += a2row[i] * argmin[i];
            double g = sgn * pj;
            bj = std::max(0.0, bj + step_size * (-g) / std::max(1.0, std::fabs(g)));
        }
    }
    return {best, std::max(best_lb, interval_lb)};
}

}  // namespace verisparse
