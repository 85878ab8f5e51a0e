#ifndef VERISPARSE_CONFIG_HPP
#define VERISPARSE_CONFIG_HPP

#include <optional>
#include <string>
#include <vector>

#include "verisparse/decoder.hpp"
#include "verisparse/training.hpp"
#include "verisparse/verifier.hpp"

namespace verisparse {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProblemConfig {
    int n = 0;
    int m1 = 0;
    int m2 = 0;
    int l = 0;
    double eps = 0.5;
    std::optional<std::vector<double>> tau;  // thresholds for the binarized block
};

struct VerificationConfig {
    double budget_s = 3600.0;
    uint64_t max_subdomains = 10000000;
    int workers = 1;
    uint64_t seed = 1;
    bool deterministic = false;
    int samples_per_subdomain = 1;
    int beta_steps = 20;
    double beta_step_size = 0.1;
};

// Experiment description parsed from a JSON document with sections
// problem / architecture / training / verification. Unknown keys are errors.
struct ExperimentConfig {
    ProblemConfig problem;
    ArchConfig architecture;
    TrainConfig training;
    VerificationConfig verification;

    SparseDomainSpec domain() const;
    VerifyBudget budget() const;
};

ExperimentConfig parse_config(const std::string &json_text);
ExperimentConfig load_config(const std::string &path);

// Gaussian iid sensing matrices (and thresholds) for the experiment; the
// training seed keeps fixed-vs-learned comparisons on identical matrices.
SensingSpec build_sensing(const ProblemConfig &problem, uint64_t seed);

}  // namespace verisparse

#endif
