#ifndef VERISPARSE_VERIFIER_HPP
#define VERISPARSE_VERIFIER_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "verisparse/bounds.hpp"
#include "verisparse/decoder.hpp"

namespace verisparse {

enum class PropertyKind { on, off };

// "on":  x in X, x_i >= eps  =>  z_i > 0
// "off": x in X, x_i  = 0    =>  z_i < 0
struct PropertySpec {
    int coordinate = 0;
    PropertyKind kind = PropertyKind::on;
};

std::string to_string(PropertyKind kind);

enum class VerifyStatus { proved, counterexample, timeout };

std::string to_string(VerifyStatus status);

struct VerifyStats {
    uint64_t subdomains_explored = 0;
    uint64_t bound_calls = 0;
    uint64_t max_queue = 0;
    double wall_time_s = 0.0;
};

struct VerificationOutcome {
    PropertySpec property;
    VerifyStatus status = VerifyStatus::timeout;
    std::optional<std::vector<double>> counterexample;
    VerifyStats stats;
    // Fraction of the root domain accounted for by processed leaves; 1 for a
    // completed proof (up to accumulation error).
    double coverage = 0.0;
};

struct VerifyBudget {
    double budget_s = 3600.0;
    uint64_t max_subdomains = 10000000;
    int samples_per_subdomain = 1;
    int beta_steps = 20;
    double beta_step_size = 0.1;
    uint64_t seed = 1;
    std::ostream *proof_log = nullptr;  // optional JSONL subdomain records
};

// Root of the proof search: "on" forces coordinate i active, "off" pins it to
// zero irrespective of the frontier.
Subdomain root_domain(const SparseDomainSpec &spec, const PropertySpec &prop);

// True iff x is a valid member of the domain, satisfies the property premise
// and the evaluated logit violates the conclusion (z_i <= 0 for "on",
// z_i >= 0 for "off"; the measure-zero boundary counts as a violation).
bool check_counterexample(const Model &model, const PropertySpec &prop,
                          const std::vector<double> &x);

// Branch-and-bound proof search for one property. Worst-bound-first queue;
// support-extension splits until the pattern is fixed, then longest-edge box
// splits; sign-neuron branching takes precedence when a binarized measurement
// straddles zero.
VerificationOutcome verify_property(const BoundEngine &engine, const PropertySpec &prop,
                                    const VerifyBudget &budget);

// All 2n properties; `workers` threads verify independent properties in
// parallel. Per-property RNG seeds derive from budget.seed, so results do not
// depend on the worker count.
std::vector<VerificationOutcome> verify_network(const Model &model, const VerifyBudget &budget,
                                                int workers = 1);

// Results CSV used by the CLI and the report tool.
void write_results_csv(std::ostream &out, const std::vector<VerificationOutcome> &outcomes);

}  // namespace verisparse

#endif
