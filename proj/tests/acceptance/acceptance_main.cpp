// Acceptance suite: end-to-end checks of the train/verify/decode pipeline at
// desk scale. Each criterion prints one [PASS]/[FAIL] line; the binary exits
// nonzero if any criterion fails. Trained models are cached in a scratch
// directory and reused across criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "verisparse/bounds.hpp"
#include "verisparse/config.hpp"
#include "verisparse/decoder.hpp"
#include "verisparse/oracles.hpp"
#include "verisparse/report.hpp"
#include "verisparse/training.hpp"
#include "verisparse/verifier.hpp"

#ifndef VERISPARSE_CLI_PATH
#error "VERISPARSE_CLI_PATH must point at the CLI binary"
#endif

namespace {

using namespace verisparse;
namespace fs = std::filesystem;

struct Criterion {
    int id;
    std::string name;
    bool passed;
    std::string detail;
    double seconds;
};

std::vector<Criterion> g_results;

void record(int id, const std::string &name, bool passed, const std::string &detail,
            double seconds) {
    g_results.push_back({id, name, passed, detail, seconds});
    std::printf("[%s] criterion %d: %s (%.1fs) %s\n", passed ? "PASS" : "FAIL", id, name.c_str(),
                seconds, detail.c_str());
    std::fflush(stdout);
}

void run_criterion(int id, const std::string &name,
                   const std::function<std::pair<bool, std::string>()> &body) {
    auto t0 = std::chrono::steady_clock::now();
    bool passed = false;
    std::string detail;
    try {
        auto [ok, text] = body();
        passed = ok;
        detail = text;
    } catch (const std::exception &e) {
        passed = false;
        detail = std::string("exception: ") + e.what();
    }
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    record(id, name, passed, detail, seconds);
}

fs::path g_work;

int run_cli(const std::string &args) {
    std::string cmd = std::string(VERISPARSE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WEXITSTATUS(status);
}

int run_cli_capture(const std::string &args, std::string &output) {
    fs::path tmp = g_work / "cli_output.txt";
    std::string cmd =
        std::string(VERISPARSE_CLI_PATH) + " " + args + " >" + tmp.string() + " 2>&1";
    int status = std::system(cmd.c_str());
    std::ifstream in(tmp);
    std::stringstream buf;
    buf << in.rdbuf();
    output = buf.str();
    return status == -1 ? -1 : WEXITSTATUS(status);
}

void write_file(const fs::path &path, const std::string &text) {
    std::ofstream out(path);
    out << text;
}

// Experiment configs shared by several criteria. The verified models train
// without the stability penalty; see the n20 reg sweep in the training log.
std::string desk_config(int n, int m1, int m2, int l, int width, int steps, bool learn,
                        uint64_t seed) {
    std::ostringstream oss;
    oss << "{\n"
        << "  \"problem\": {\"n\": " << n << ", \"m1\": " << m1 << ", \"m2\": " << m2
        << ", \"l\": " << l << ", \"eps\": 0.5},\n"
        << "  \"architecture\": {\"width\": " << width << ", \"hidden_layers\": 2},\n"
        << "  \"training\": {\"steps\": " << steps
        << ", \"lr_final_fraction\": 0.05, \"pgd_iterations\": 20, \"pgd_restarts\": 2,\n"
        << "               \"corner_batch\": 16, \"grad_points\": 8, \"uniform_batch\": 16,\n"
        << "               \"reg_lambda\": 0.0, \"l1_lambda\": 0.0, \"learn_sensing\": "
        << (learn ? "true" : "false") << ", \"seed\": " << seed << ", \"log_every\": 1000},\n"
        << "  \"verification\": {\"budget_s\": 900}\n"
        << "}\n";
    return oss.str();
}

bool train_model(const std::string &tag, const std::string &config) {
    fs::path cfg = g_work / (tag + ".json");
    fs::path model = g_work / (tag + "_model.json");
    if (fs::exists(model)) return true;
    write_file(cfg, config);
    return run_cli("train --config " + cfg.string() + " --out " + model.string()) == 0;
}

fs::path model_path(const std::string &tag) { return g_work / (tag + "_model.json"); }
fs::path results_path(const std::string &tag) { return g_work / (tag + "_results.csv"); }

int verify_model(const std::string &tag, double budget_s = 900.0) {
    return run_cli("verify --model " + model_path(tag).string() + " --out " +
                   results_path(tag).string() + " --deterministic --budget-s " +
                   std::to_string(budget_s));
}

std::vector<ResultRow> read_results(const std::string &tag) {
    std::ifstream in(results_path(tag));
    return parse_results_csv(in, results_path(tag).string());
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

Subdomain random_subdomain_for_test(const SparseDomainSpec &spec, Rng &rng) {
    Subdomain sub;
    for (int attempt = 0; attempt < 50; ++attempt) {
        sub = Subdomain{};
        sub.frontier = rng.uniform_int(spec.n + 1);
        sub.on = sample_subset(spec.n, rng.uniform_int(spec.l + 1), rng);
        if (static_cast<int>(sub.on.size()) == spec.l && rng.coin()) {
            for (int i : sub.on) {
                double a = rng.uniform(spec.eps, 1.0);
                double b = rng.uniform(spec.eps, 1.0);
                sub.boxes[i] = Interval{std::min(a, b), std::max(a, b)};
            }
        }
        if (feasible(spec, sub)) return sub;
    }
    return Subdomain{};
}

// ---------------------------------------------------------------------------
// 1. Oracle equivalence: O(n) concretizer vs brute-force enumeration.
std::pair<bool, std::string> criterion_oracle_equivalence() {
    Rng rng(811);
    int cases = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        int n = 2 + rng.uniform_int(7);
        int l = 1 + rng.uniform_int(n);
        double eps = rng.coin() ? 0.25 : 0.5;
        SparseDomainSpec spec{n, l, eps};
        Subdomain sub = random_subdomain_for_test(spec, rng);
        AffineObjective obj;
        obj.c.resize(n);
        for (double &v : obj.c) v = rng.uniform(-3.0, 3.0);
        obj.c0 = rng.uniform(-2.0, 2.0);

        double diff = std::fabs(concretize_min(spec, sub, obj) - brute_force_min(spec, sub, obj));
        AffineObjective neg;
        neg.c.resize(n);
        for (int i = 0; i < n; ++i) neg.c[i] = -obj.c[i];
        neg.c0 = -obj.c0;
        double diff_max =
            std::fabs(concretize_max(spec, sub, obj) + brute_force_min(spec, sub, neg));
        worst = std::max({worst, diff, diff_max});
        if (worst >= 1e-9) break;
        ++cases;
    }
    std::ostringstream oss;
    oss << cases << " instances, max |fast - brute| = " << worst;
    return {cases == 10000 && worst < 1e-9, oss.str()};
}

// ---------------------------------------------------------------------------
// 2. Bound soundness over 100 random decoders x 10^4 samples.
std::pair<bool, std::string> criterion_bound_soundness() {
    Rng rng(812);
    uint64_t samples_checked = 0, comparisons = 0;
    for (int net = 0; net < 100; ++net) {
        int n = 4 + rng.uniform_int(9);  // 4..12
        int l = 1 + rng.uniform_int(std::min(3, n - 1));
        int m2 = net % 4 == 3 ? 2 : 0;
        int m1 = std::max(1, n / 2 - m2);
        Model model;
        model.domain = SparseDomainSpec{n, l, 0.5};
        model.sensing.a1 = Matrix(m1, n);
        for (double &v : model.sensing.a1.data()) v = rng.normal();
        if (m2 > 0) {
            Matrix a2(m2, n);
            for (double &v : a2.data()) v = rng.normal();
            model.sensing.a2 = std::move(a2);
            model.sensing.tau.assign(m2, 0.0);
        }
        ArchConfig arch;
        arch.hidden_layers = 2;
        arch.width = 16;
        Rng prng(9000 + net);
        model.params = init_params(arch, n, m1 + m2, prng);

        BoundEngine engine(model);
        Subdomain root;
        PreactivationBounds ibp = engine.interval_bounds(root);
        auto crown = engine.compute_bounds(root, nullptr);
        if (!crown) return {false, "compute_bounds pruned the root domain"};

        for (size_t t = 0; t < crown->hidden.size(); ++t) {
            for (size_t q = 0; q < crown->hidden[t].size(); ++q) {
                ++comparisons;
                if (crown->hidden[t][q].lo < ibp.hidden[t][q].lo - 1e-12 ||
                    crown->hidden[t][q].hi > ibp.hidden[t][q].hi + 1e-12)
                    return {false, "backward bounds looser than interval bounds"};
            }
        }
        for (size_t i = 0; i < crown->logits.size(); ++i) {
            ++comparisons;
            if (crown->logits[i].lo < ibp.logits[i].lo - 1e-12 ||
                crown->logits[i].hi > ibp.logits[i].hi + 1e-12)
                return {false, "backward logit bounds looser than interval bounds"};
        }

        for (int draw = 0; draw < 10000; ++draw) {
            std::vector<double> x = sample_in_subdomain(model.domain, root, rng);
            ForwardTrace trace = forward(model.params, model.sensing, x);
            ++samples_checked;
            for (size_t t = 0; t < trace.pre.size(); ++t)
                for (size_t q = 0; q < trace.pre[t].size(); ++q)
                    if (trace.pre[t][q] < crown->hidden[t][q].lo - 1e-7 ||
                        trace.pre[t][q] > crown->hidden[t][q].hi + 1e-7)
                        return {false, "sampled activation escaped its bounds"};
            for (size_t i = 0; i < trace.z.size(); ++i)
                if (trace.z[i] < crown->logits[i].lo - 1e-7 ||
                    trace.z[i] > crown->logits[i].hi + 1e-7)
                    return {false, "sampled logit escaped its bounds"};
        }
    }
    std::ostringstream oss;
    oss << "100 decoders, " << samples_checked << " samples, " << comparisons
        << " dominance comparisons";
    return {true, oss.str()};
}

// ---------------------------------------------------------------------------
// 3. End-to-end verified decoder at n=10, m=7, l=2 with a learned matrix.
std::pair<bool, std::string> criterion_end_to_end() {
    if (!train_model("n10", desk_config(10, 7, 0, 2, 48, 8000, true, 1)))
        return {false, "training failed"};
    int code = verify_model("n10");
    if (code != 0) return {false, "verify exit code " + std::to_string(code)};
    std::vector<ResultRow> rows = read_results("n10");
    int proved = 0;
    for (const ResultRow &r : rows) proved += r.status == "proved";
    if (proved != 20) return {false, "expected 20 proved properties"};

    // 10^6-sample fuzz: half uniform members, half corners.
    Model model = load_model(model_path("n10").string());
    Rng rng(813);
    for (long draw = 0; draw < 1000000; ++draw) {
        std::vector<double> x = draw % 2 == 0
                                    ? sample_in_subdomain(model.domain, Subdomain::root(), rng)
                                    : sample_corner(model.domain, rng);
        ForwardTrace trace = forward(model.params, model.sensing, x);
        for (int i = 0; i < model.domain.n; ++i) {
            bool active = x[i] != 0.0;
            if (active != (trace.z[i] > 0.0)) {
                std::ostringstream oss;
                oss << "fuzz violation at draw " << draw << ", coordinate " << i;
                return {false, oss.str()};
            }
        }
    }
    return {true, "20/20 proved, 10^6-sample fuzz clean"};
}

// ---------------------------------------------------------------------------
// 4. Off coordinates need at least as much branching as on coordinates.
std::pair<bool, std::string> criterion_off_harder_than_on() {
    if (!fs::exists(results_path("n10"))) return {false, "criterion 3 artifacts missing"};
    if (!train_model("n20m12", desk_config(20, 12, 0, 3, 64, 30000, true, 1)))
        return {false, "n20 training failed"};
    int code = verify_model("n20m12");
    if (code != 0) return {false, "n20 verify exit code " + std::to_string(code)};

    std::ostringstream oss;
    for (const std::string &tag : {std::string("n10"), std::string("n20m12")}) {
        std::vector<double> on_counts, off_counts;
        for (const ResultRow &r : read_results(tag)) {
            (r.kind == "on" ? on_counts : off_counts)
                .push_back(static_cast<double>(r.subdomains));
        }
        double mon = median_of(on_counts), moff = median_of(off_counts);
        oss << tag << ": median subdomains on " << mon << ", off " << moff << "; ";
        if (!(moff >= mon)) return {false, oss.str()};
    }
    return {true, oss.str()};
}

// ---------------------------------------------------------------------------
// 5. Learning the sensing matrix speeds verification up.
std::pair<bool, std::string> criterion_learned_vs_fixed() {
    if (!train_model("n20m10L", desk_config(20, 10, 0, 3, 64, 40000, true, 1)))
        return {false, "learned-A training failed"};
    if (!train_model("n20m10F", desk_config(20, 10, 0, 3, 64, 40000, false, 1)))
        return {false, "fixed-A training failed"};

    int code_learned = verify_model("n20m10L");
    if (code_learned != 0)
        return {false, "learned-A run must fully verify, exit " + std::to_string(code_learned)};
    int code_fixed = verify_model("n20m10F");  // timeout tolerated, refutation not

    // Fixed-sensing training must leave the matrix bytes untouched.
    {
        ExperimentConfig cfg = parse_config(desk_config(20, 10, 0, 3, 64, 40000, false, 1));
        SensingSpec seeded = build_sensing(cfg.problem, cfg.training.seed);
        Model fixed_model = load_model(model_path("n20m10F").string());
        if (fixed_model.sensing.a1.data() != seeded.a1.data())
            return {false, "fixed sensing matrix changed during training"};
    }

    uint64_t learned_total = 0, fixed_total = 0;
    for (const ResultRow &r : read_results("n20m10L")) learned_total += r.subdomains;
    for (const ResultRow &r : read_results("n20m10F")) fixed_total += r.subdomains;

    std::ostringstream oss;
    oss << "subdomains learned " << learned_total << " vs fixed " << fixed_total
        << " (fixed exit " << code_fixed << ")";
    if (code_fixed == 2) return {false, "fixed-A run refuted: " + oss.str()};
    return {learned_total <= fixed_total, oss.str()};
}

// ---------------------------------------------------------------------------
// 6. Binary measurements: full verification, and the binarized block matters.
std::pair<bool, std::string> criterion_binary_measurements() {
    if (!train_model("bin", desk_config(10, 4, 3, 2, 48, 30000, false, 1)))
        return {false, "binary training failed"};
    fs::path proof_log = g_work / "bin_proof.jsonl";
    int code = run_cli("verify --model " + model_path("bin").string() + " --out " +
                       results_path("bin").string() + " --deterministic --budget-s 900" +
                       " --proof-log " + proof_log.string());
    if (code != 0) return {false, "binary verify exit code " + std::to_string(code)};
    Model model = load_model(model_path("bin").string());
    if (model.sensing.m2() != 3) return {false, "expected a binarized block"};

    // The proof tree must actually contain sign-branch decisions.
    {
        std::ifstream in(proof_log);
        std::string line;
        bool saw_sign_branch = false;
        while (std::getline(in, line))
            if (line.find("\"signs\"") != std::string::npos) saw_sign_branch = true;
        if (!saw_sign_branch) return {false, "no sign-branched subdomains in the proof log"};
    }

    // Ablation: identical task, binarized block zeroed out, same training
    // budget; the result must fail fuzzing.
    ExperimentConfig cfg = parse_config(desk_config(10, 4, 3, 2, 48, 30000, false, 1));
    SparseDomainSpec spec = cfg.domain();
    SensingSpec sensing = build_sensing(cfg.problem, cfg.training.seed);
    for (double &v : sensing.a2->data()) v = 0.0;
    for (double &v : sensing.tau) v = 0.0;
    Rng rng(Rng::derive_seed(cfg.training.seed, 0x1f));
    DecoderParams init = init_params(cfg.architecture, spec.n, sensing.m(), rng);
    TrainResult ablation = train(cfg.training, spec, sensing, init, nullptr);

    Model ablated{spec, ablation.sensing, ablation.params};
    Rng fuzz(814);
    long violations = 0;
    for (long draw = 0; draw < 100000; ++draw) {
        std::vector<double> x = sample_in_subdomain(spec, Subdomain::root(), fuzz);
        ForwardTrace trace = forward(ablated.params, ablated.sensing, x);
        for (int i = 0; i < spec.n; ++i) {
            bool active = x[i] != 0.0;
            if (active != (trace.z[i] > 0.0)) {
                ++violations;
                break;
            }
        }
    }
    std::ostringstream oss;
    oss << "20/20 proved with sign branching; zeroed-block ablation: " << violations
        << " fuzz violations in 1e5";
    return {violations > 0, oss.str()};
}

// ---------------------------------------------------------------------------
// 7. A corrupted model yields exit code 2 and an independently confirmed witness.
std::pair<bool, std::string> criterion_counterexample_path() {
    if (!fs::exists(model_path("n10"))) return {false, "criterion 3 artifacts missing"};
    Model model = load_model(model_path("n10").string());
    const int victim = 2;
    for (int c = 0; c < model.params.output.w.cols(); ++c)
        model.params.output.w(victim, c) = -model.params.output.w(victim, c);
    model.params.output.b[victim] = -model.params.output.b[victim];
    fs::path broken = g_work / "broken_model.json";
    save_model(model, broken.string());

    fs::path csv = g_work / "broken_results.csv";
    int code = run_cli("verify --model " + broken.string() + " --out " + csv.string() +
                       " --deterministic --budget-s 300");
    if (code != 2) return {false, "expected exit code 2, got " + std::to_string(code)};

    std::ifstream in(csv);
    std::vector<ResultRow> rows = parse_results_csv(in, csv.string());
    int confirmed = 0;
    for (const ResultRow &r : rows) {
        if (r.status != "counterexample") continue;
        std::vector<double> witness;
        {
            std::string nums = r.counterexample_json;
            for (char &ch : nums)
                if (ch == '[' || ch == ']' || ch == ',') ch = ' ';
            std::stringstream ss(nums);
            double v;
            while (ss >> v) witness.push_back(v);
        }
        PropertySpec prop{r.coordinate,
                          r.kind == "on" ? PropertyKind::on : PropertyKind::off};
        if (!check_counterexample(model, prop, witness))
            return {false, "reported witness failed check_counterexample"};
        PropertyCheck check =
            exhaustive_verify(model, prop.coordinate, prop.kind == PropertyKind::on, 2);
        if (check.holds)
            return {false, "exhaustive_verify could not reproduce the violation"};
        ++confirmed;
    }
    std::ostringstream oss;
    oss << confirmed << " witnesses confirmed by check_counterexample and exhaustive_verify";
    return {confirmed > 0, oss.str()};
}

// ---------------------------------------------------------------------------
// 8. Bound slack correlates with the number of compatible sparsity patterns.
std::pair<bool, std::string> criterion_pattern_correlation() {
    if (!fs::exists(model_path("n20m12"))) return {false, "criterion 4 artifacts missing"};
    Model model = load_model(model_path("n20m12").string());
    const SparseDomainSpec &spec = model.domain;
    BoundEngine engine(model);
    const int coord = spec.n - 1;  // one fixed "on" property
    Rng rng(815);

    std::vector<double> log_patterns, lbs;
    int attempts = 0;
    while (static_cast<int>(log_patterns.size()) < 2000 && attempts < 100000) {
        ++attempts;
        Subdomain sub;
        sub.on = {coord};
        int extra_on = rng.uniform_int(spec.l);
        int zeros = rng.uniform_int(spec.n / 2);
        std::vector<int> pool;
        for (int i = 0; i < spec.n; ++i)
            if (i != coord) pool.push_back(i);
        for (int k = static_cast<int>(pool.size()) - 1; k > 0; --k)
            std::swap(pool[k], pool[rng.uniform_int(k + 1)]);
        for (int k = 0; k < extra_on; ++k) sub.on.push_back(pool[k]);
        std::sort(sub.on.begin(), sub.on.end());
        for (int k = extra_on; k < extra_on + zeros && k < static_cast<int>(pool.size()); ++k)
            sub.forced_zero.push_back(pool[k]);
        std::sort(sub.forced_zero.begin(), sub.forced_zero.end());
        if (!feasible(spec, sub)) continue;
        auto pab = engine.compute_bounds(sub, nullptr);
        if (!pab) continue;
        lbs.push_back(engine.logit_lower_bound(sub, *pab, coord, false).lb);
        log_patterns.push_back(std::log(static_cast<double>(pattern_count(spec, sub))));
    }
    if (log_patterns.size() < 2000) return {false, "could not sample 2000 subdomains"};

    auto ranks = [](const std::vector<double> &v) {
        std::vector<int> idx(v.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        size_t i = 0;
        while (i < idx.size()) {
            size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    std::vector<double> ra = ranks(log_patterns), rb = ranks(lbs);
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(ra.size());
    mb /= static_cast<double>(rb.size());
    double num = 0.0, da = 0.0, db = 0.0;
    for (size_t i = 0; i < ra.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    double rho = num / std::sqrt(da * db);
    std::ostringstream oss;
    oss << log_patterns.size() << " subdomains, spearman(log patterns, lb) = " << rho;
    return {rho <= -0.3, oss.str()};
}

// ---------------------------------------------------------------------------
// 9. Decode latency below 10 ms per signal at n = 50.
std::pair<bool, std::string> criterion_decode_latency() {
    Model model;
    model.domain = SparseDomainSpec{50, 5, 0.5};
    Rng rng(816);
    model.sensing.a1 = Matrix(30, 50);
    for (double &v : model.sensing.a1.data()) v = rng.normal();
    ArchConfig arch;  // default width 128, two hidden layers
    model.params = init_params(arch, 50, 30, rng);
    fs::path path = g_work / "n50_model.json";
    save_model(model, path.string());

    // A batch of measurement vectors; each row reports its own latency.
    fs::path input = g_work / "n50_measurements.txt";
    {
        std::ofstream out(input);
        for (int row = 0; row < 50; ++row) {
            std::vector<double> x = sample_in_subdomain(model.domain, Subdomain::root(), rng);
            std::vector<double> y = measure(model.sensing, x);
            for (size_t j = 0; j < y.size(); ++j) out << (j ? "," : "") << y[j];
            out << "\n";
        }
    }
    std::string output;
    int code = run_cli_capture("decode --model " + path.string() + " --input " + input.string(),
                               output);
    if (code != 0) return {false, "decode exit code " + std::to_string(code)};

    std::vector<double> latencies;
    std::istringstream in(output);
    std::string line;
    while (std::getline(in, line)) {
        size_t pos = line.find("latency_ms=");
        if (pos == std::string::npos) continue;
        latencies.push_back(std::stod(line.substr(pos + 11)));
    }
    if (latencies.size() != 50) return {false, "expected 50 decoded rows"};
    double med = median_of(latencies);
    std::ostringstream oss;
    oss << "median single-signal latency " << med << " ms";
    return {med < 10.0, oss.str()};
}

// ---------------------------------------------------------------------------
// 10. Deterministic verification: identical statistics across runs.
std::pair<bool, std::string> criterion_determinism() {
    if (!fs::exists(model_path("n10"))) return {false, "criterion 3 artifacts missing"};
    fs::path a = g_work / "det_a.csv";
    fs::path b = g_work / "det_b.csv";
    for (const fs::path &out : {a, b}) {
        int code = run_cli("verify --model " + model_path("n10").string() + " --out " +
                           out.string() + " --deterministic --seed 5 --budget-s 300");
        if (code != 0) return {false, "verify exit code " + std::to_string(code)};
    }
    // Compare everything except the wall-time column.
    auto strip = [](const fs::path &p) {
        std::ifstream in(p);
        std::vector<ResultRow> rows = parse_results_csv(in, p.string());
        std::ostringstream oss;
        for (const ResultRow &r : rows)
            oss << r.coordinate << '|' << r.kind << '|' << r.status << '|' << r.subdomains << '|'
                << r.bound_calls << '|' << r.counterexample_json << '\n';
        return oss.str();
    };
    bool same = strip(a) == strip(b);
    return {same, same ? "proof statistics identical across runs" : "statistics differ"};
}

}  // namespace

int main() {
    char tmpl[] = "/tmp/verisparse_acceptance_XXXXXX";
    const char *dir = mkdtemp(tmpl);
    if (!dir) {
        std::fprintf(stderr, "cannot create scratch directory\n");
        return 1;
    }
    g_work = dir;
    std::printf("scratch directory: %s\n", dir);

    run_criterion(1, "oracle equivalence", criterion_oracle_equivalence);
    run_criterion(2, "bound soundness", criterion_bound_soundness);
    run_criterion(3, "end-to-end verified decoder", criterion_end_to_end);
    run_criterion(4, "off properties branch more than on", criterion_off_harder_than_on);
    run_criterion(5, "learned sensing verifies faster", criterion_learned_vs_fixed);
    run_criterion(6, "binary measurements", criterion_binary_measurements);
    run_criterion(7, "counterexample path", criterion_counterexample_path);
    run_criterion(8, "pattern-count correlation", criterion_pattern_correlation);
    run_criterion(9, "decode latency", criterion_decode_latency);
    run_criterion(10, "deterministic verification", criterion_determinism);

    int failed = 0;
    for (const Criterion &c : g_results) failed += !c.passed;
    std::printf("%d/%zu criteria passed\n", static_cast<int>(g_results.size()) - failed,
                g_results.size());
    return failed == 0 ? 0 : 1;
}
