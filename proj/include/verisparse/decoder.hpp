#ifndef VERISPARSE_DECODER_HPP
#define VERISPARSE_DECODER_HPP

#include <optional>
#include <string>
#include <vector>

#include "verisparse/linalg.hpp"
#include "verisparse/signal_domain.hpp"

namespace verisparse {

// Measurement operator: y = [A1 x ; sign(A2 x - tau)], with sign(v) = +1 for
// v >= 0 and -1 otherwise.
struct SensingSpec {
    Matrix a1;                  // m1 x n
    std::optional<Matrix> a2;   // m2 x n
    std::vector<double> tau;    // length m2
    bool train_a1 = false;
    bool train_a2 = false;

    int n() const { return a1.cols(); }
    int m1() const { return a1.rows(); }
    int m2() const { return a2 ? a2->rows() : 0; }
    int m() const { return m1() + m2(); }

    void validate() const;
};

std::vector<double> measure(const SensingSpec &sensing, const std::vector<double> &x);

struct Layer {
    Matrix w;
    std::vector<double> b;
};

// Decoder network. Layer 0 is a fixed scale expansion: h0[(j,k)] = scales[k] * y_j.
// Hidden layer t computes ReLU(W_t [h_{t-1}; h0] + b_t); for t = 1 the
// predecessor is h0 itself, so the input is h0 twice. The output layer is an
// affine map of the last hidden activation (of h0 when there are no hidden
// layers) to n logits.
struct DecoderParams {
    std::vector<double> scales;
    std::vector<Layer> hidden;
    Layer output;

    int num_scales() const { return static_cast<int>(scales.size()); }
    int depth() const { return static_cast<int>(hidden.size()); }
    int feature_dim(int m) const { return m * num_scales(); }
    // Input width of hidden layer t (0-based) or of the output layer.
    int layer_input_dim(int m, int t) const;
    int output_input_dim(int m) const;

    void validate(int n, int m) const;
};

// All intermediate vectors of one forward pass; reused by training gradients
// and by sanity checks in the verifier.
struct ForwardTrace {
    std::vector<double> y;         // m measurements (sign block already applied)
    std::vector<double> sign_pre;  // m2: A2 x - tau
    std::vector<double> h0;
    std::vector<std::vector<double>> pre;   // per hidden layer, pre-activation
    std::vector<std::vector<double>> post;  // per hidden layer, after ReLU
    std::vector<double> z;                  // n logits
};

ForwardTrace forward(const DecoderParams &params, const SensingSpec &sensing,
                     const std::vector<double> &x);
// Decoding path: network evaluated on a given measurement vector.
ForwardTrace forward_from_measurements(const DecoderParams &params, int m,
                                       const std::vector<double> &y);

std::vector<int> decode_support(const std::vector<double> &z);

struct ArchConfig {
    std::vector<double> scales = {0.5, 1.0, 2.0, 4.0};
    int hidden_layers = 2;
    int width = 128;
};

// He-style fan-in init, zero biases. Deterministic for a given rng state.
DecoderParams init_params(const ArchConfig &arch, int n, int m, Rng &rng);

// The unit of exchange between train and verify: domain, sensing and
// parameters in one JSON document.
struct Model {
    SparseDomainSpec domain;
    SensingSpec sensing;
    DecoderParams params;

    void validate() const;
};

std::string model_to_json(const Model &model);
Model model_from_json(const std::string &text);
void save_model(const Model &model, const std::string &path);
Model load_model(const std::string &path);

}  // namespace verisparse

#endif
