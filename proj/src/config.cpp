#include "verisparse/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace verisparse {

using nlohmann::json;

namespace {

void reject_unknown(const json &obj, const char *section,
                    std::initializer_list<const char *> known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char *k : known)
            if (it.key() == k) ok = true;
        if (!ok)
            throw ConfigError(std::string("config: unknown key \"") + it.key() + "\" in " +
                              section);
    }
}

template <typename T>
void read(const json &obj, const char *key, T &out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

SparseDomainSpec ExperimentConfig::domain() const {
    return SparseDomainSpec{problem.n, problem.l, problem.eps};
}

VerifyBudget ExperimentConfig::budget() const {
    VerifyBudget b;
    b.budget_s = verification.budget_s;
    b.max_subdomains = verification.max_subdomains;
    b.samples_per_subdomain = verification.samples_per_subdomain;
    b.beta_steps = verification.beta_steps;
    b.beta_step_size = verification.beta_step_size;
    b.seed = verification.seed;
    return b;
}

ExperimentConfig parse_config(const std::string &json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error &e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown(doc, "top level", {"problem", "architecture", "training", "verification"});

    ExperimentConfig cfg;
    if (!doc.contains("problem")) throw ConfigError("config: missing problem section");
    {
        const json &p = doc.at("problem");
        reject_unknown(p, "problem", {"n", "m1", "m2", "l", "eps", "tau"});
        if (!p.contains("n") || !p.contains("m1") || !p.contains("l"))
            throw ConfigError("config: problem requires n, m1 and l");
        cfg.problem.n = p.at("n").get<int>();
        cfg.problem.m1 = p.at("m1").get<int>();
        read(p, "m2", cfg.problem.m2);
        cfg.problem.l = p.at("l").get<int>();
        read(p, "eps", cfg.problem.eps);
        if (p.contains("tau")) cfg.problem.tau = p.at("tau").get<std::vector<double>>();
    }
    if (doc.contains("architecture")) {
        const json &a = doc.at("architecture");
        reject_unknown(a, "architecture", {"scales", "hidden_layers", "width"});
        read(a, "scales", cfg.architecture.scales);
        read(a, "hidden_layers", cfg.architecture.hidden_layers);
        read(a, "width", cfg.architecture.width);
    }
    if (doc.contains("training")) {
        const json &t = doc.at("training");
        reject_unknown(t, "training",
                       {"steps", "lr", "lr_final_fraction", "beta1", "beta2", "adam_delta",
                        "pgd_iterations", "pgd_restarts", "pgd_step", "pgd_momentum",
                        "corner_batch", "grad_points", "uniform_batch", "reg_lambda", "l1_lambda",
                        "learn_sensing", "seed", "log_every"});
        read(t, "steps", cfg.training.steps);
        read(t, "lr", cfg.training.lr);
        read(t, "lr_final_fraction", cfg.training.lr_final_fraction);
        read(t, "beta1", cfg.training.beta1);
        read(t, "beta2", cfg.training.beta2);
        read(t, "adam_delta", cfg.training.adam_delta);
        read(t, "pgd_iterations", cfg.training.pgd.iterations);
        read(t, "pgd_restarts", cfg.training.pgd.restarts);
        read(t, "pgd_step", cfg.training.pgd.step);
        read(t, "pgd_momentum", cfg.training.pgd.momentum);
        read(t, "corner_batch", cfg.training.corner_batch);
        read(t, "grad_points", cfg.training.grad_points);
        read(t, "uniform_batch", cfg.training.uniform_batch);
        read(t, "reg_lambda", cfg.training.reg_lambda);
        read(t, "l1_lambda", cfg.training.l1_lambda);
        read(t, "learn_sensing", cfg.training.learn_sensing);
        read(t, "seed", cfg.training.seed);
        read(t, "log_every", cfg.training.log_every);
    }
    if (doc.contains("verification")) {
        const json &v = doc.at("verification");
        reject_unknown(v, "verification",
                       {"budget_s", "max_subdomains", "workers", "seed", "deterministic",
                        "samples_per_subdomain", "beta_steps", "beta_step_size"});
        read(v, "budget_s", cfg.verification.budget_s);
        read(v, "max_subdomains", cfg.verification.max_subdomains);
        read(v, "workers", cfg.verification.workers);
        read(v, "seed", cfg.verification.seed);
        read(v, "deterministic", cfg.verification.deterministic);
        read(v, "samples_per_subdomain", cfg.verification.samples_per_subdomain);
        read(v, "beta_steps", cfg.verification.beta_steps);
        read(v, "beta_step_size", cfg.verification.beta_step_size);
    }

    // Cross-field consistency.
    const ProblemConfig &p = cfg.problem;
    if (p.n < 1 || p.m1 < 0 || p.m2 < 0 || p.l < 1)
        throw ConfigError("config: problem dimensions must be positive");
    if (p.m1 + p.m2 < 1) throw ConfigError("config: need at least one measurement");
    if (p.m1 + p.m2 >= p.n) throw ConfigError("config: need m1 + m2 < n");
    if (p.l > p.n) throw ConfigError("config: need l <= n");
    if (!(p.eps > 0.0 && p.eps <= 1.0)) throw ConfigError("config: need 0 < eps <= 1");
    if (p.tau && static_cast<int>(p.tau->size()) != p.m2)
        throw ConfigError("config: tau length must equal m2");
    try {
        cfg.training.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (cfg.verification.workers < 1) throw ConfigError("config: workers >= 1");
    return cfg;
}

ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

SensingSpec build_sensing(const ProblemConfig &problem, uint64_t seed) {
    Rng rng(Rng::derive_seed(seed, 0x5e/*sensing*/));
    SensingSpec sensing;
    sensing.a1 = Matrix(problem.m1, problem.n);
    for (double &v : sensing.a1.data()) v = rng.normal();
    if (problem.m2 > 0) {
        Matrix a2(problem.m2, problem.n);
        for (double &v : a2.data()) v = rng.normal();
        sensing.a2 = std::move(a2);
        sensing.tau = problem.tau ? *problem.tau : std::vector<double>(problem.m2, 0.0);
    }
    sensing.validate();
    return sensing;
}

}  // namespace verisparse
