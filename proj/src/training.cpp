#include "verisparse/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace verisparse {

void TrainConfig::validate() const {
    if (steps < 1) throw std::invalid_argument("TrainConfig: steps >= 1");
    if (reg_lambda < 0.0 || l1_lambda < 0.0)
        throw std::invalid_argument("TrainConfig: lambdas must be nonnegative");
    if (pgd.restarts < 1) throw std::invalid_argument("TrainConfig: pgd.restarts >= 1");
    if (pgd.iterations < 1) throw std::invalid_argument("TrainConfig: pgd.iterations >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr > 0");
    if (corner_batch < 1 || grad_points < 1)
        throw std::invalid_argument("TrainConfig: corner_batch and grad_points >= 1");
}

std::vector<double> support_label(const std::vector<double> &x) {
    std::vector<double> s(x.size());
    for (size_t i = 0; i < x.size(); ++i) s[i] = x[i] != 0.0 ? 1.0 : 0.0;
    return s;
}

namespace {

double softplus(double z) {
    // Stable: max(z, 0) + log1p(exp(-|z|))
    return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
}

double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

}  // namespace

double loss_from_logits(const std::vector<double> &z, const std::vector<double> &s) {
    KahanSum acc;
    for (size_t i = 0; i < z.size(); ++i) acc.add(softplus(z[i]) - s[i] * z[i]);
    return acc.value() / static_cast<double>(z.size());
}

std::vector<double> loss_grad_logits(const std::vector<double> &z,
                                     const std::vector<double> &s) {
    std::vector<double> g(z.size());
    for (size_t i = 0; i < z.size(); ++i)
        g[i] = (sigmoid(z[i]) - s[i]) / static_cast<double>(z.size());
    return g;
}

double loss(const DecoderParams &params, const SensingSpec &sensing,
            const std::vector<double> &x) {
    ForwardTrace trace = forward(params, sensing, x);
    return loss_from_logits(trace.z, support_label(x));
}

namespace {

// Gradient holders shaped like the trainable tensors.
struct Grads {
    std::vector<Layer> hidden;
    Layer output;
    Matrix a1;
    Matrix a2;
    std::vector<double> tau;

    static Grads zeros_like(const DecoderParams &params, const SensingSpec &sensing) {
        Grads g;
        for (const Layer &lay : params.hidden)
            g.hidden.push_back(Layer{Matrix(lay.w.rows(), lay.w.cols()),
                                     std::vector<double>(lay.b.size(), 0.0)});
        g.output = Layer{Matrix(params.output.w.rows(), params.output.w.cols()),
                         std::vector<double>(params.output.b.size(), 0.0)};
        g.a1 = Matrix(sensing.a1.rows(), sensing.a1.cols());
        if (sensing.a2) {
            g.a2 = Matrix(sensing.a2->rows(), sensing.a2->cols());
            g.tau.assign(sensing.tau.size(), 0.0);
        }
        return g;
    }
};

// Backpropagates d(loss)/d(z) through the network. Optionally produces the
// input gradient (straight-through on the sign block) and the sensing
// gradients.
void backward(const DecoderParams &params, const SensingSpec &sensing,
              const std::vector<double> &x, const ForwardTrace &trace,
              const std::vector<double> &gz, Grads *grads, bool sensing_grads,
              std::vector<double> *gx) {
    const int depth = params.depth();
    const int feat = params.feature_dim(sensing.m());
    const int scales = params.num_scales();

    const std::vector<double> &last = depth > 0 ? trace.post[depth - 1] : trace.h0;
    if (grads) {
        for (size_t i = 0; i < gz.size(); ++i) {
            grads->output.b[i] += gz[i];
            double gzi = gz[i];
            for (size_t c = 0; c < last.size(); ++c) grads->output.w(i, c) += gzi * last[c];
        }
    }
    std::vector<double> gpost = matvec_t(params.output.w, gz);

    std::vector<double> gh0(feat, 0.0);
    if (depth == 0) {
        gh0 = gpost;
    }
    for (int t = depth - 1; t >= 0; --t) {
        const Layer &lay = params.hidden[t];
        std::vector<double> gpre(lay.w.rows());
        for (int q = 0; q < lay.w.rows(); ++q)
            gpre[q] = trace.pre[t][q] > 0.0 ? gpost[q] : 0.0;

        const std::vector<double> &prev = t > 0 ? trace.post[t - 1] : trace.h0;
        if (grads) {
            for (int q = 0; q < lay.w.rows(); ++q) {
                double g = gpre[q];
                if (g == 0.0) continue;
                grads->hidden[t].b[q] += g;
                double *wrow = grads->hidden[t].w.row(q);
                for (size_t c = 0; c < prev.size(); ++c) wrow[c] += g * prev[c];
                for (int c = 0; c < feat; ++c) wrow[prev.size() + c] += g * trace.h0[c];
            }
        }
        std::vector<double> gin = matvec_t(lay.w, gpre);
        if (t == 0) {
            for (int c = 0; c < feat; ++c) gh0[c] += gin[c] + gin[feat + c];
        } else {
            gpost.assign(gin.begin(), gin.begin() + params.hidden[t - 1].w.rows());
            for (int c = 0; c < feat; ++c) gh0[c] += gin[params.hidden[t - 1].w.rows() + c];
        }
    }

    std::vector<double> gy(sensing.m(), 0.0);
    for (int j = 0; j < sensing.m(); ++j) {
        double acc = 0.0;
        for (int k = 0; k < scales; ++k) acc += params.scales[k] * gh0[j * scales + k];
        gy[j] = acc;
    }

    if (gx) {
        gx->assign(sensing.n(), 0.0);
        for (int j = 0; j < sensing.m1(); ++j) {
            const double *row = sensing.a1.row(j);
            for (int i = 0; i < sensing.n(); ++i) (*gx)[i] += row[i] * gy[j];
        }
        if (sensing.a2) {  // straight-through: treat sign as identity
            for (int j = 0; j < sensing.m2(); ++j) {
                const double *row = sensing.a2->row(j);
                for (int i = 0; i < sensing.n(); ++i) (*gx)[i] += row[i] * gy[sensing.m1() + j];
            }
        }
    }

    if (grads && sensing_grads) {
        for (int j = 0; j < sensing.m1(); ++j) {
            double g = gy[j];
            if (g == 0.0) continue;
            for (int i = 0; i < sensing.n(); ++i) grads->a1(j, i) += g * x[i];
        }
        if (sensing.a2) {
            for (int j = 0; j < sensing.m2(); ++j) {
                double g = gy[sensing.m1() + j];  // straight-through estimator
                if (g == 0.0) continue;
                for (int i = 0; i < sensing.n(); ++i) grads->a2(j, i) += g * x[i];
                grads->tau[j] -= g;
            }
        }
    }
}

}  // namespace

std::vector<double> loss_input_gradient(const DecoderParams &params,
                                        const SensingSpec &sensing,
                                        const std::vector<double> &x) {
    ForwardTrace trace = forward(params, sensing, x);
    std::vector<double> gz = loss_grad_logits(trace.z, support_label(x));
    std::vector<double> gx;
    backward(params, sensing, x, trace, gz, nullptr, false, &gx);
    return gx;
}

std::vector<double> pgd_attack(const DecoderParams &params, const SensingSpec &sensing,
                               const SparseDomainSpec &spec, const PgdConfig &cfg, Rng &rng) {
    std::vector<double> best_x;
    double best_loss = -std::numeric_limits<double>::infinity();

    for (int restart = 0; restart < cfg.restarts; ++restart) {
        // Alternate restart inits: uniform members explore, corners escape
        // the saturated-loss plateaus around confidently decoded regions.
        std::vector<double> x = restart % 2 == 0
                                    ? sample_in_subdomain(spec, Subdomain::root(), rng)
                                    : sample_corner(spec, rng);
        std::vector<double> velocity(spec.n, 0.0);
        double step = cfg.step;
        double window_best = -std::numeric_limits<double>::infinity();
        double prev_window_best = -std::numeric_limits<double>::infinity();

        for (int it = 0; it <= cfg.iterations; ++it) {
            double cur = loss(params, sensing, x);
            if (cur > best_loss) {
                best_loss = cur;
                best_x = x;
            }
            window_best = std::max(window_best, cur);
            if (it == cfg.iterations) break;
            if (it > 0 && it % 10 == 0) {
                // Moving-average improvement test: halve the step when the
                // best loss in the last window stopped improving.
                if (window_best <= prev_window_best + 1e-12) step *= 0.5;
                prev_window_best = window_best;
                window_best = -std::numeric_limits<double>::infinity();
            }
            std::vector<double> g = loss_input_gradient(params, sensing, x);
            double ginf = 0.0;
            for (double v : g) ginf = std::max(ginf, std::fabs(v));
            if (ginf < 1e-15) break;  // flat region, restart will move elsewhere
            for (int i = 0; i < spec.n; ++i) {
                velocity[i] = cfg.momentum * velocity[i] + g[i] / ginf;
                x[i] += step * velocity[i];
            }
            x = project(spec, x);
        }
    }
    return best_x;
}

namespace {

struct IbpTrace {
    std::vector<Interval> x;
    std::vector<Interval> y;
    std::vector<Interval> h0;
    std::vector<std::vector<Interval>> pre;
};

IbpTrace ibp_forward(const DecoderParams &params, const SensingSpec &sensing,
                     const SparseDomainSpec &spec) {
    IbpTrace tr;
    tr.x.resize(spec.n);
    // Root domain coordinate ranges: [eps,1] when every coordinate must be
    // active (l == n), else [0, 1].
    for (int i = 0; i < spec.n; ++i)
        tr.x[i] = Interval{spec.l == spec.n ? spec.eps : 0.0, 1.0};

    tr.y.resize(sensing.m());
    for (int j = 0; j < sensing.m1(); ++j) {
        KahanSum lo, hi;
        const double *row = sensing.a1.row(j);
        for (int i = 0; i < spec.n; ++i) {
            if (row[i] >= 0.0) {
                lo.add(row[i] * tr.x[i].lo);
                hi.add(row[i] * tr.x[i].hi);
            } else {
                lo.add(row[i] * tr.x[i].hi);
                hi.add(row[i] * tr.x[i].lo);
            }
        }
        tr.y[j] = Interval{lo.value(), hi.value()};
    }
    for (int j = 0; j < sensing.m2(); ++j) {
        double plo = -sensing.tau[j], phi = -sensing.tau[j];
        const double *row = sensing.a2->row(j);
        for (int i = 0; i < spec.n; ++i) {
            if (row[i] >= 0.0) {
                plo += row[i] * tr.x[i].lo;
                phi += row[i] * tr.x[i].hi;
            } else {
                plo += row[i] * tr.x[i].hi;
                phi += row[i] * tr.x[i].lo;
            }
        }
        if (plo >= 0.0)
            tr.y[sensing.m1() + j] = Interval{1.0, 1.0};
        else if (phi < 0.0)
            tr.y[sensing.m1() + j] = Interval{-1.0, -1.0};
        else
            tr.y[sensing.m1() + j] = Interval{-1.0, 1.0};
    }

    const int scales = params.num_scales();
    tr.h0.resize(params.feature_dim(sensing.m()));
    for (int j = 0; j < sensing.m(); ++j) {
        for (int k = 0; k < scales; ++k) {
            double s = params.scales[k];
            tr.h0[j * scales + k] = s >= 0.0 ? Interval{s * tr.y[j].lo, s * tr.y[j].hi}
                                             : Interval{s * tr.y[j].hi, s * tr.y[j].lo};
        }
    }

    tr.pre.resize(params.depth());
    std::vector<Interval> post = tr.h0;
    for (int t = 0; t < params.depth(); ++t) {
        std::vector<Interval> in = post;
        in.insert(in.end(), tr.h0.begin(), tr.h0.end());
        const Layer &lay = params.hidden[t];
        tr.pre[t].resize(lay.w.rows());
        for (int q = 0; q < lay.w.rows(); ++q) {
            KahanSum lo, hi;
            lo.add(lay.b[q]);
            hi.add(lay.b[q]);
            const double *row = lay.w.row(q);
            for (size_t c = 0; c < in.size(); ++c) {
                if (row[c] >= 0.0) {
                    lo.add(row[c] * in[c].lo);
                    hi.add(row[c] * in[c].hi);
                } else {
                    lo.add(row[c] * in[c].hi);
                    hi.add(row[c] * in[c].lo);
                }
            }
            tr.pre[t][q] = Interval{lo.value(), hi.value()};
        }
        post.resize(tr.pre[t].size());
        for (size_t q = 0; q < post.size(); ++q)
            post[q] = Interval{std::max(0.0, tr.pre[t][q].lo), std::max(0.0, tr.pre[t][q].hi)};
    }
    return tr;
}

double l1_norm_weights(const DecoderParams &params) {
    KahanSum acc;
    for (const Layer &lay : params.hidden)
        for (double w : lay.w.data()) acc.add(std::fabs(w));
    for (double w : params.output.w.data()) acc.add(std::fabs(w));
    return acc.value();
}

// Reverse pass of ibp_forward: seeds are gradients on the hidden
// pre-activation interval endpoints; accumulates into weight/bias grads and
// (when sensing_grads) into A1. The sign block passes no gradient.
void ibp_backward(const DecoderParams &params, const SensingSpec &sensing, const IbpTrace &tr,
                  std::vector<std::vector<double>> glb, std::vector<std::vector<double>> gub,
                  Grads &grads, bool sensing_grads) {
    const int depth = params.depth();
    const int feat = params.feature_dim(sensing.m());
    const int scales = params.num_scales();

    std::vector<double> gh0_lo(feat, 0.0), gh0_hi(feat, 0.0);

    for (int t = depth - 1; t >= 0; --t) {
        const Layer &lay = params.hidden[t];
        std::vector<Interval> in = t > 0 ? [&] {
            std::vector<Interval> v(tr.pre[t - 1].size());
            for (size_t q = 0; q < v.size(); ++q)
                v[q] = Interval{std::max(0.0, tr.pre[t - 1][q].lo),
                                std::max(0.0, tr.pre[t - 1][q].hi)};
            return v;
        }() : tr.h0;
        std::vector<Interval> full = in;
        full.insert(full.end(), tr.h0.begin(), tr.h0.end());

        std::vector<double> gin_lo(full.size(), 0.0), gin_hi(full.size(), 0.0);
        for (int q = 0; q < lay.w.rows(); ++q) {
            double gl = glb[t][q], gu = gub[t][q];
            if (gl == 0.0 && gu == 0.0) continue;
            grads.hidden[t].b[q] += gl + gu;
            const double *row = lay.w.row(q);
            double *wrow = grads.hidden[t].w.row(q);
            for (size_t c = 0; c < full.size(); ++c) {
                double w = row[c];
                if (w >= 0.0) {
                    wrow[c] += gl * full[c].lo + gu * full[c].hi;
                    gin_lo[c] += w * gl;
                    gin_hi[c] += w * gu;
                } else {
                    wrow[c] += gl * full[c].hi + gu * full[c].lo;
                    gin_hi[c] += w * gl;
                    gin_lo[c] += w * gu;
                }
            }
        }
        size_t prev_size = full.size() - feat;
        for (int c = 0; c < feat; ++c) {
            gh0_lo[c] += gin_lo[prev_size + c];
            gh0_hi[c] += gin_hi[prev_size + c];
        }
        if (t == 0) {
            for (int c = 0; c < feat; ++c) {
                gh0_lo[c] += gin_lo[c];
                gh0_hi[c] += gin_hi[c];
            }
        } else {
            for (size_t q = 0; q < prev_size; ++q) {
                if (tr.pre[t - 1][q].lo > 0.0) glb[t - 1][q] += gin_lo[q];
                if (tr.pre[t - 1][q].hi > 0.0) gub[t - 1][q] += gin_hi[q];
            }
        }
    }

    if (!sensing_grads) return;
    std::vector<double> gy_lo(sensing.m(), 0.0), gy_hi(sensing.m(), 0.0);
    for (int j = 0; j < sensing.m(); ++j) {
        for (int k = 0; k < scales; ++k) {
            double s = params.scales[k];
            if (s >= 0.0) {
                gy_lo[j] += s * gh0_lo[j * scales + k];
                gy_hi[j] += s * gh0_hi[j * scales + k];
            } else {
                gy_hi[j] += s * gh0_lo[j * scales + k];
                gy_lo[j] += s * gh0_hi[j * scales + k];
            }
        }
    }
    for (int j = 0; j < sensing.m1(); ++j) {
        double gl = gy_lo[j], gu = gy_hi[j];
        if (gl == 0.0 && gu == 0.0) continue;
        const double *row = sensing.a1.row(j);
        for (int i = 0; i < sensing.n(); ++i) {
            if (row[i] >= 0.0)
                grads.a1(j, i) += gl * tr.x[i].lo + gu * tr.x[i].hi;
            else
                grads.a1(j, i) += gl * tr.x[i].hi + gu * tr.x[i].lo;
        }
    }
}

}  // namespace

RegResult regularizer(const DecoderParams &params, const SensingSpec &sensing,
                      const SparseDomainSpec &spec, double reg_lambda, double l1_lambda) {
    IbpTrace tr = ibp_forward(params, sensing, spec);
    RegResult res;
    KahanSum penalty;
    for (const auto &layer : tr.pre) {
        for (const Interval &iv : layer) {
            if (iv.lo < 0.0 && iv.hi > 0.0) {
                ++res.unstable_neurons;
                penalty.add(std::sqrt(-iv.lo * iv.hi));
            }
        }
    }
    res.penalty = penalty.value();
    res.value = reg_lambda * res.penalty + l1_lambda * l1_norm_weights(params);
    return res;
}

namespace {

// Adam over one flat tensor.
struct AdamTensor {
    std::vector<double> m, v;
    void init(size_t size) {
        m.assign(size, 0.0);
        v.assign(size, 0.0);
    }
    void step(double *theta, const double *g, size_t size, double lr, double b1, double b2,
              double delta, int t) {
        double c1 = 1.0 - std::pow(b1, t);
        double c2 = 1.0 - std::pow(b2, t);
        for (size_t i = 0; i < size; ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            theta[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + delta);
        }
    }
};

void add_reg_gradients(const DecoderParams &params, const SensingSpec &sensing,
                       const SparseDomainSpec &spec, double reg_lambda, double l1_lambda,
                       bool sensing_grads, Grads &grads) {
    IbpTrace tr = ibp_forward(params, sensing, spec);
    std::vector<std::vector<double>> glb(params.depth()), gub(params.depth());
    for (int t = 0; t < params.depth(); ++t) {
        glb[t].assign(tr.pre[t].size(), 0.0);
        gub[t].assign(tr.pre[t].size(), 0.0);
        for (size_t q = 0; q < tr.pre[t].size(); ++q) {
            double lo = tr.pre[t][q].lo, hi = tr.pre[t][q].hi;
            if (lo < 0.0 && hi > 0.0) {
                double root = std::sqrt(std::max(-lo * hi, 1e-18));
                glb[t][q] = reg_lambda * (-hi / (2.0 * root));
                gub[t][q] = reg_lambda * (-lo / (2.0 * root));
            }
        }
    }
    ibp_backward(params, sensing, tr, std::move(glb), std::move(gub), grads, sensing_grads);

    if (l1_lambda > 0.0) {
        for (int t = 0; t < params.depth(); ++t) {
            const auto &w = params.hidden[t].w.data();
            auto &gw = grads.hidden[t].w.data();
            for (size_t i = 0; i < w.size(); ++i)
                gw[i] += l1_lambda * (w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0));
        }
        const auto &w = params.output.w.data();
        auto &gw = grads.output.w.data();
        for (size_t i = 0; i < w.size(); ++i)
            gw[i] += l1_lambda * (w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0));
    }
}

}  // namespace

double loss_weight_gradient(const DecoderParams &params, const SensingSpec &sensing,
                            const std::vector<double> &x, int layer, int row, int col) {
    Grads grads = Grads::zeros_like(params, sensing);
    ForwardTrace trace = forward(params, sensing, x);
    std::vector<double> gz = loss_grad_logits(trace.z, support_label(x));
    backward(params, sensing, x, trace, gz, &grads, false, nullptr);
    return layer < 0 ? grads.output.w(row, col) : grads.hidden[layer].w(row, col);
}

double regularizer_weight_gradient(const DecoderParams &params, const SensingSpec &sensing,
                                   const SparseDomainSpec &spec, double reg_lambda,
                                   double l1_lambda, int layer, int row, int col) {
    Grads grads = Grads::zeros_like(params, sensing);
    add_reg_gradients(params, sensing, spec, reg_lambda, l1_lambda, false, grads);
    return layer < 0 ? grads.output.w(row, col) : grads.hidden[layer].w(row, col);
}

TrainResult train(const TrainConfig &cfg, const SparseDomainSpec &spec,
                  const SensingSpec &sensing_in, const DecoderParams &init,
                  std::ostream *log_stream) {
    cfg.validate();
    spec.validate();

    TrainResult result;
    result.params = init;
    result.sensing = sensing_in;
    result.params.validate(spec.n, sensing_in.m());

    Rng rng(cfg.seed);
    const bool learn = cfg.learn_sensing;

    // One Adam state per tensor; shared step counter for bias correction.
    std::vector<AdamTensor> adam;
    auto for_each_tensor = [&](auto &&fn) {
        for (int t = 0; t < result.params.depth(); ++t) {
            fn(result.params.hidden[t].w.data());
            fn(result.params.hidden[t].b);
        }
        fn(result.params.output.w.data());
        fn(result.params.output.b);
        if (learn) {
            fn(result.sensing.a1.data());
            if (result.sensing.a2) {
                fn(result.sensing.a2->data());
                fn(result.sensing.tau);
            }
        }
    };
    for_each_tensor([&](std::vector<double> &v) {
        adam.emplace_back();
        adam.back().init(v.size());
    });

    if (log_stream) *log_stream << "step,loss,attack_loss,reg,unstable_neurons\n";

    for (int step = 1; step <= cfg.steps; ++step) {
        // Candidate pool: corners, mixed face/interior members, the attack
        // point; train on the worst. Pure corners miss the box faces where a
        // corner-fit decoder dips between endpoint values, so the "uniform"
        // draws snap each active coordinate to an endpoint half the time.
        std::vector<std::vector<double>> candidates;
        for (int b = 0; b < cfg.corner_batch; ++b)
            candidates.push_back(sample_corner(spec, rng));
        for (int b = 0; b < cfg.uniform_batch; ++b) {
            std::vector<double> x = sample_in_subdomain(spec, Subdomain::root(), rng);
            for (double &v : x) {
                if (v == 0.0) continue;
                double u = rng.uniform01();
                if (u < 0.25)
                    v = spec.eps;
                else if (u < 0.5)
                    v = 1.0;
            }
            candidates.push_back(std::move(x));
        }
        candidates.push_back(pgd_attack(result.params, result.sensing, spec, cfg.pgd, rng));

        std::vector<double> losses(candidates.size());
        for (size_t k = 0; k < candidates.size(); ++k) {
            if (!contains(spec, candidates[k]))
                throw std::logic_error("train: training point left the signal domain");
            losses[k] = loss(result.params, result.sensing, candidates[k]);
        }
        double loss_attack = losses.back();

        std::vector<size_t> order(candidates.size());
        for (size_t k = 0; k < order.size(); ++k) order[k] = k;
        std::sort(order.begin(), order.end(),
                  [&](size_t a, size_t b) { return losses[a] > losses[b]; });
        int selected = std::min<int>(cfg.grad_points, static_cast<int>(order.size()));
        double loss_t = losses[order[0]];

        if (!std::isfinite(loss_t)) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "train: non-finite loss %g at step %d", loss_t, step);
            throw std::runtime_error(buf);
        }

        Grads grads = Grads::zeros_like(result.params, result.sensing);
        for (int k = 0; k < selected; ++k) {
            const std::vector<double> &x_t = candidates[order[k]];
            ForwardTrace trace = forward(result.params, result.sensing, x_t);
            std::vector<double> gz = loss_grad_logits(trace.z, support_label(x_t));
            for (double &g : gz) g /= selected;
            backward(result.params, result.sensing, x_t, trace, gz, &grads, learn, nullptr);
        }

        RegResult reg = regularizer(result.params, result.sensing, spec, cfg.reg_lambda,
                                    cfg.l1_lambda);
        if (cfg.reg_lambda > 0.0 || cfg.l1_lambda > 0.0)
            add_reg_gradients(result.params, result.sensing, spec, cfg.reg_lambda,
                              cfg.l1_lambda, learn, grads);

        double lr = cfg.lr;
        if (cfg.lr_final_fraction < 1.0) {
            double floor = cfg.lr * cfg.lr_final_fraction;
            double phase = static_cast<double>(step - 1) / std::max(1, cfg.steps - 1);
            lr = floor + (cfg.lr - floor) * 0.5 * (1.0 + std::cos(M_PI * phase));
        }
        size_t slot = 0;
        auto step_tensor = [&](std::vector<double> &theta, std::vector<double> &g) {
            adam[slot].step(theta.data(), g.data(), theta.size(), lr, cfg.beta1, cfg.beta2,
                            cfg.adam_delta, step);
            ++slot;
        };
        for (int t = 0; t < result.params.depth(); ++t) {
            step_tensor(result.params.hidden[t].w.data(), grads.hidden[t].w.data());
            step_tensor(result.params.hidden[t].b, grads.hidden[t].b);
        }
        step_tensor(result.params.output.w.data(), grads.output.w.data());
        step_tensor(result.params.output.b, grads.output.b);
        if (learn) {
            step_tensor(result.sensing.a1.data(), grads.a1.data());
            if (result.sensing.a2) {
                step_tensor(result.sensing.a2->data(), grads.a2.data());
                step_tensor(result.sensing.tau, grads.tau);
            }
        }

        if (step == 1 || step == cfg.steps || step % cfg.log_every == 0) {
            TrainLogEntry entry{step, loss_t, loss_attack, reg.value, reg.unstable_neurons};
            result.log.push_back(entry);
            if (log_stream) {
                *log_stream << entry.step << ',' << entry.loss << ',' << entry.attack_loss << ','
                            << entry.reg << ',' << entry.unstable_neurons << '\n';
            }
        }
    }
    return result;
}

}  // namespace verisparse
