#ifndef VERISPARSE_TRAINING_HPP
#define VERISPARSE_TRAINING_HPP

#include <iosfwd>
#include <vector>

#include "verisparse/decoder.hpp"
#include "verisparse/signal_domain.hpp"

namespace verisparse {

struct PgdConfig {
    int iterations = 100;
    int restarts = 5;
    double step = 0.5;
    double momentum = 0.75;
};

struct TrainConfig {
    int steps = 2000;
    double lr = 1e-3;
    // Cosine decay floor as a fraction of lr; 1 keeps the rate constant.
    double lr_final_fraction = 1.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_delta = 1e-8;
    PgdConfig pgd;
    // Corners sampled per step and the number of worst candidates whose
    // gradients are averaged. 1/1 trains on the single max(corner, attack)
    // point; larger batches stabilize the minimax optimization.
    int corner_batch = 1;
    int grad_points = 1;
    // Uniform domain members added to the candidate pool. Corners miss the
    // thin cells carved out by binarized measurements; interior samples cover
    // them.
    int uniform_batch = 0;
    double reg_lambda = 1e-4;
    double l1_lambda = 1e-6;
    bool learn_sensing = false;
    uint64_t seed = 1;
    int log_every = 25;

    void validate() const;
};

// s_i = 1 iff x_i != 0.
std::vector<double> support_label(const std::vector<double> &x);

// Mean binary cross-entropy with logits over the n coordinates:
// (1/n) sum_i softplus(z_i) - s_i z_i.
double loss(const DecoderParams &params, const SensingSpec &sensing,
            const std::vector<double> &x);
double loss_from_logits(const std::vector<double> &z, const std::vector<double> &s);

// Gradient of the mean BCE w.r.t. the logits: (sigma(z_i) - s_i) / n.
std::vector<double> loss_grad_logits(const std::vector<double> &z,
                                     const std::vector<double> &s);

// Projected gradient ascent on the loss over the signal domain, with
// momentum, per-restart step halving on stalled progress, and best-iterate
// tracking across restarts. Sign measurements pass gradients straight through.
std::vector<double> pgd_attack(const DecoderParams &params, const SensingSpec &sensing,
                               const SparseDomainSpec &spec, const PgdConfig &cfg, Rng &rng);

struct RegResult {
    double value = 0.0;          // reg_lambda * unstable penalty + l1_lambda * |W|_1
    double penalty = 0.0;        // sum over hidden neurons of relu(-lb*ub)^(1/2)
    int unstable_neurons = 0;
};

// Interval bounds over the root domain; penalizes neurons whose pre-activation
// interval straddles zero, plus an L1 term on the network weights.
RegResult regularizer(const DecoderParams &params, const SensingSpec &sensing,
                      const SparseDomainSpec &spec, double reg_lambda, double l1_lambda);

struct TrainLogEntry {
    int step = 0;
    double loss = 0.0;
    double attack_loss = 0.0;
    double reg = 0.0;
    int unstable_neurons = 0;
};

struct TrainResult {
    DecoderParams params;
    SensingSpec sensing;
    std::vector<TrainLogEntry> log;
};

// Algorithm: per step, sample a random corner and a PGD point, train on
// whichever has higher loss, and take an Adam step on loss + regularizer.
// With learn_sensing the gradient also flows into A1 (and into A2 and tau via
// a straight-through estimator for the sign). Throws std::runtime_error on
// non-finite loss.
TrainResult train(const TrainConfig &cfg, const SparseDomainSpec &spec,
                  const SensingSpec &sensing, const DecoderParams &init,
                  std::ostream *log_stream = nullptr);

// Loss gradient w.r.t. the input signal (straight-through on sign blocks).
std::vector<double> loss_input_gradient(const DecoderParams &params,
                                        const SensingSpec &sensing,
                                        const std::vector<double> &x);

// Single-entry gradient probes for finite-difference checks in tests.
// layer = -1 selects the output layer.
double loss_weight_gradient(const DecoderParams &params, const SensingSpec &sensing,
                            const std::vector<double> &x, int layer, int row, int col);
double regularizer_weight_gradient(const DecoderParams &params, const SensingSpec &sensing,
                                   const SparseDomainSpec &spec, double reg_lambda,
                                   double l1_lambda, int layer, int row, int col);

}  // namespace verisparse

#endif
