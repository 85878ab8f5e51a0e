#include "verisparse/verifier.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <ostream>
#include <queue>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace verisparse {

std::string to_string(PropertyKind kind) { return kind == PropertyKind::on ? "on" : "off"; }

std::string to_string(VerifyStatus status) {
    switch (status) {
        case VerifyStatus::proved: return "proved";
        case VerifyStatus::counterexample: return "counterexample";
        case VerifyStatus::timeout: return "timeout";
    }
    return "unknown";
}

Subdomain root_domain(const SparseDomainSpec &spec, const PropertySpec &prop) {
    if (prop.coordinate < 0 || prop.coordinate >= spec.n)
        throw std::invalid_argument("root_domain: coordinate out of range");
    Subdomain root;
    if (prop.kind == PropertyKind::on) {
        root.on.push_back(prop.coordinate);
    } else {
        root.forced_zero.push_back(prop.coordinate);
    }
    return root;
}

bool check_counterexample(const Model &model, const PropertySpec &prop,
                          const std::vector<double> &x) {
    if (static_cast<int>(x.size()) != model.domain.n) return false;
    if (!contains(model.domain, x)) return false;
    double xi = x[prop.coordinate];
    bool premise = prop.kind == PropertyKind::on ? xi >= model.domain.eps : xi == 0.0;
    if (!premise) return false;
    ForwardTrace trace = forward(model.params, model.sensing, x);
    double zi = trace.z[prop.coordinate];
    return prop.kind == PropertyKind::on ? zi <= 0.0 : zi >= 0.0;
}

namespace {

struct QueueNode {
    Subdomain sub;
    double priority;  // certified bound of the parent (lower pops first)
    std::shared_ptr<const PreactivationBounds> parent_bounds;
    long double weight;  // fraction of the root domain
    uint64_t seq;
};

struct NodeOrder {
    bool operator()(const QueueNode &a, const QueueNode &b) const {
        if (a.priority != b.priority) return a.priority > b.priority;  // min-heap
        return a.seq > b.seq;                                          // FIFO ties
    }
};

void log_record(std::ostream *log, const PropertySpec &prop, const Subdomain &sub,
                const char *event, double lb) {
    if (!log) return;
    nlohmann::json rec;
    rec["coordinate"] = prop.coordinate;
    rec["kind"] = to_string(prop.kind);
    rec["event"] = event;
    rec["j"] = sub.frontier;
    rec["on"] = sub.on;
    if (!sub.sign_decisions.empty()) {
        nlohmann::json sd = nlohmann::json::object();
        for (const auto &[k, v] : sub.sign_decisions) sd[std::to_string(k)] = v;
        rec["signs"] = std::move(sd);
    }
    if (std::isfinite(lb)) rec["lb"] = lb;
    *log << rec.dump() << '\n';
}

}  // namespace

VerificationOutcome verify_property(const BoundEngine &engine, const PropertySpec &prop,
                                    const VerifyBudget &budget) {
    const Model &model = engine.model();
    const SparseDomainSpec &spec = model.domain;
    const bool negate = prop.kind == PropertyKind::off;

    VerificationOutcome outcome;
    outcome.property = prop;
    auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    Rng rng(Rng::derive_seed(budget.seed,
                             static_cast<uint64_t>(prop.coordinate) * 2 +
                                 (prop.kind == PropertyKind::off ? 1 : 0)));

    Subdomain root = root_domain(spec, prop);
    if (!feasible(spec, root)) {
        // No signal satisfies the premise; vacuously proved.
        outcome.status = VerifyStatus::proved;
        outcome.coverage = 1.0;
        outcome.stats.wall_time_s = elapsed();
        return outcome;
    }

    std::priority_queue<QueueNode, std::vector<QueueNode>, NodeOrder> queue;
    uint64_t seq = 0;
    long double covered = 0.0L;
    queue.push(QueueNode{std::move(root), -std::numeric_limits<double>::infinity(), nullptr,
                         1.0L, seq++});

    while (!queue.empty()) {
        if (elapsed() > budget.budget_s ||
            outcome.stats.subdomains_explored >= budget.max_subdomains) {
            outcome.status = VerifyStatus::timeout;
            outcome.coverage = static_cast<double>(covered);
            outcome.stats.wall_time_s = elapsed();
            return outcome;
        }
        QueueNode node = queue.top();
        queue.pop();
        ++outcome.stats.subdomains_explored;

        std::optional<PreactivationBounds> pab =
            engine.compute_bounds(node.sub, node.parent_bounds.get());
        if (!pab) {
            // Empty region (contradicted sign decision or interval): prune.
            covered += node.weight;
            log_record(budget.proof_log, prop, node.sub, "prune", NAN);
            continue;
        }

        double lb;
        if (!node.sub.sign_decisions.empty()) {
            auto [beta, beta_lb] = engine.optimize_beta(node.sub, *pab, prop.coordinate, negate,
                                                        budget.beta_steps, budget.beta_step_size);
            lb = beta_lb;
        } else {
            lb = engine.logit_lower_bound(node.sub, *pab, prop.coordinate, negate).lb;
        }
        ++outcome.stats.bound_calls;

        // Test points: the true network decides refutation, never the bounds.
        for (int s = 0; s < budget.samples_per_subdomain; ++s) {
            std::vector<double> x_test = sample_in_subdomain(spec, node.sub, rng);
            ForwardTrace trace = forward(model.params, model.sensing, x_test);
            double zi = trace.z[prop.coordinate];
            bool violates = negate ? zi >= 0.0 : zi <= 0.0;
            if (violates && check_counterexample(model, prop, x_test)) {
                outcome.status = VerifyStatus::counterexample;
                outcome.counterexample = std::move(x_test);
                outcome.coverage = static_cast<double>(covered);
                outcome.stats.wall_time_s = elapsed();
                log_record(budget.proof_log, prop, node.sub, "counterexample", lb);
                return outcome;
            }
        }

        if (lb >= 0.0) {
            covered += node.weight;
            log_record(budget.proof_log, prop, node.sub, "proved", lb);
            continue;
        }
        log_record(budget.proof_log, prop, node.sub, "split", lb);

        auto bounds_ptr = std::make_shared<const PreactivationBounds>(std::move(*pab));

        // Sign branching first: decide the widest straddling binarized
        // measurement. Then support extension; box splits once the pattern is
        // fixed.
        int sign_pick = -1;
        double widest = -1.0;
        for (size_t j = 0; j < bounds_ptr->sign_value.size(); ++j) {
            if (bounds_ptr->sign_value[j] != 0) continue;
            double w = bounds_ptr->sign_pre[j].width();
            if (w > widest) {
                widest = w;
                sign_pick = static_cast<int>(j);
            }
        }

        std::vector<Subdomain> children;
        if (sign_pick >= 0) {
            for (int sigma : {+1, -1}) {
                Subdomain child = node.sub;
                child.sign_decisions[sign_pick] = sigma;
                children.push_back(std::move(child));
            }
        } else if (support_budget(spec, node.sub) > 0) {
            children = split(spec, node.sub);
        } else {
            auto [lo_child, hi_child] = split_fixed_pattern(spec, node.sub);
            children.push_back(std::move(lo_child));
            children.push_back(std::move(hi_child));
        }

        // Weights: support splits partition the pattern count; sign and box
        // splits cover the same patterns, so halve.
        if (sign_pick >= 0 || support_budget(spec, node.sub) == 0) {
            for (Subdomain &child : children)
                queue.push(QueueNode{std::move(child), lb, bounds_ptr,
                                     node.weight / static_cast<long double>(children.size()),
                                     seq++});
        } else {
            uint64_t parent_patterns = pattern_count(spec, node.sub);
            for (Subdomain &child : children) {
                long double frac = parent_patterns == 0
                                       ? 0.0L
                                       : static_cast<long double>(pattern_count(spec, child)) /
                                             static_cast<long double>(parent_patterns);
                queue.push(QueueNode{std::move(child), lb, bounds_ptr, node.weight * frac, seq++});
            }
        }
        outcome.stats.max_queue = std::max<uint64_t>(outcome.stats.max_queue, queue.size());
    }

    outcome.status = VerifyStatus::proved;
    outcome.coverage = static_cast<double>(covered);
    outcome.stats.wall_time_s = elapsed();
    return outcome;
}

std::vector<VerificationOutcome> verify_network(const Model &model, const VerifyBudget &budget,
                                                int workers) {
    model.validate();
    BoundEngine engine(model);

    std::vector<PropertySpec> props;
    for (int i = 0; i < model.domain.n; ++i) props.push_back({i, PropertyKind::on});
    for (int i = 0; i < model.domain.n; ++i) props.push_back({i, PropertyKind::off});

    std::vector<VerificationOutcome> outcomes(props.size());
    if (workers <= 1) {
        for (size_t k = 0; k < props.size(); ++k)
            outcomes[k] = verify_property(engine, props[k], budget);
        return outcomes;
    }

    // Properties are independent proofs; hand them out to a small pool. The
    // proof log is shared mutable state, so parallel runs must not use it.
    VerifyBudget local = budget;
    if (workers > 1) local.proof_log = nullptr;
    std::atomic<size_t> next{0};
    auto work = [&] {
        while (true) {
            size_t k = next.fetch_add(1);
            if (k >= props.size()) return;
            outcomes[k] = verify_property(engine, props[k], local);
        }
    };
    std::vector<std::thread> pool;
    int count = std::min<int>(workers, static_cast<int>(props.size()));
    pool.reserve(count);
    for (int t = 0; t < count; ++t) pool.emplace_back(work);
    for (std::thread &t : pool) t.join();
    return outcomes;
}

void write_results_csv(std::ostream &out, const std::vector<VerificationOutcome> &outcomes) {
    out << "property_coordinate,kind,status,wall_time_s,subdomains,bound_calls,counterexample_json\n";
    for (const VerificationOutcome &o : outcomes) {
        out << o.property.coordinate << ',' << to_string(o.property.kind) << ','
            << to_string(o.status) << ',' << o.stats.wall_time_s << ','
            << o.stats.subdomains_explored << ',' << o.stats.bound_calls << ',';
        if (o.counterexample) {
            nlohmann::json witness = *o.counterexample;
            std::string text = witness.dump();
            out << '"' << text << '"';  // JSON arrays carry commas; quote the field
        }
        out << '\n';
    }
}

}  // namespace verisparse
