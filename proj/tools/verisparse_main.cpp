// verisparse: train, verify, decode and report on neural sparse-support
// decoders. Exit codes: 0 success/verified, 1 usage error, 2 counterexample
// found, 3 incomplete (timeout), 4 runtime failure.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "verisparse/config.hpp"
#include "verisparse/decoder.hpp"
#include "verisparse/oracles.hpp"
#include "verisparse/report.hpp"
#include "verisparse/training.hpp"
#include "verisparse/verifier.hpp"

namespace {

using namespace verisparse;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCounterexample = 2;
constexpr int kExitIncomplete = 3;
constexpr int kExitFailure = 4;

int cmd_train(const std::string &config_path, const std::string &out_path) {
    ExperimentConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const ConfigError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    SparseDomainSpec spec = cfg.domain();
    SensingSpec sensing = build_sensing(cfg.problem, cfg.training.seed);
    Rng rng(Rng::derive_seed(cfg.training.seed, 0x1f /*init*/));
    DecoderParams init = init_params(cfg.architecture, spec.n, sensing.m(), rng);

    std::ofstream log(out_path + ".log");
    if (!log) {
        std::cerr << "error: cannot open training log " << out_path << ".log\n";
        return kExitUsage;
    }
    TrainResult result;
    try {
        result = train(cfg.training, spec, sensing, init, &log);
    } catch (const std::runtime_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }

    Model model{spec, result.sensing, result.params};
    save_model(model, out_path);
    if (!result.log.empty()) {
        const TrainLogEntry &last = result.log.back();
        std::cout << "trained " << cfg.training.steps << " steps; final loss " << last.loss
                  << ", unstable neurons " << last.unstable_neurons << "\n";
    }
    std::cout << "model written to " << out_path << "\n";
    return kExitOk;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

int cmd_verify(const std::string &model_path, const std::string &out_path, VerifyBudget budget,
               int workers, bool deterministic, const std::string &proof_log_path) {
    Model model;
    try {
        model = load_model(model_path);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    if (deterministic) workers = 1;

    std::ofstream proof_log;
    if (!proof_log_path.empty()) {
        proof_log.open(proof_log_path);
        if (!proof_log) {
            std::cerr << "error: cannot open proof log " << proof_log_path << "\n";
            return kExitUsage;
        }
        budget.proof_log = &proof_log;
    }

    std::vector<VerificationOutcome> outcomes = verify_network(model, budget, workers);

    std::ofstream csv(out_path);
    if (!csv) {
        std::cerr << "error: cannot open " << out_path << "\n";
        return kExitUsage;
    }
    write_results_csv(csv, outcomes);

    int proved = 0, refuted = 0, timeouts = 0;
    std::vector<double> on_times, off_times;
    for (const VerificationOutcome &o : outcomes) {
        switch (o.status) {
            case VerifyStatus::proved: ++proved; break;
            case VerifyStatus::counterexample: ++refuted; break;
            case VerifyStatus::timeout: ++timeouts; break;
        }
        (o.property.kind == PropertyKind::on ? on_times : off_times)
            .push_back(o.stats.wall_time_s);
    }
    std::cout << "properties: " << outcomes.size() << "  proved: " << proved
              << "  counterexamples: " << refuted << "  timeouts: " << timeouts << "\n";
    std::cout << "median wall time: on " << median(on_times) << " s, off " << median(off_times)
              << " s\n";
    std::cout << "results written to " << out_path << "\n";

    if (refuted > 0) return kExitCounterexample;
    if (timeouts > 0) return kExitIncomplete;
    return kExitOk;
}

std::vector<double> parse_vector(const std::string &text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

int cmd_decode(const std::string &model_path, const std::string &y_text,
               const std::string &input_path) {
    Model model;
    try {
        model = load_model(model_path);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    std::vector<std::vector<double>> batch;
    if (!y_text.empty()) {
        batch.push_back(parse_vector(y_text));
    } else {
        std::ifstream in(input_path);
        if (!in) {
            std::cerr << "error: cannot open " << input_path << "\n";
            return kExitUsage;
        }
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) batch.push_back(parse_vector(line));
    }

    const int m = model.sensing.m();
    double total_ms = 0.0;
    for (const std::vector<double> &y : batch) {
        if (static_cast<int>(y.size()) != m) {
            std::cerr << "error: measurement has length " << y.size() << ", expected " << m
                      << "\n";
            return kExitUsage;
        }
        auto t0 = std::chrono::steady_clock::now();
        ForwardTrace trace = forward_from_measurements(model.params, m, y);
        std::vector<int> support = decode_support(trace.z);
        std::vector<double> x_hat;
        if (model.sensing.m2() == 0 && !support.empty()) {
            Matrix restricted(model.sensing.m1(), static_cast<int>(support.size()));
            for (int r = 0; r < model.sensing.m1(); ++r)
                for (size_t k = 0; k < support.size(); ++k)
                    restricted(r, static_cast<int>(k)) = model.sensing.a1(r, support[k]);
            std::vector<double> coeffs = solve_least_squares(restricted,
                                                             {y.begin(), y.begin() + model.sensing.m1()});
            x_hat.assign(model.domain.n, 0.0);
            for (size_t k = 0; k < support.size(); ++k) x_hat[support[k]] = coeffs[k];
        }
        double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              t0)
                        .count();
        total_ms += ms;

        std::cout << "support=[";
        for (size_t k = 0; k < support.size(); ++k)
            std::cout << (k ? "," : "") << support[k];
        std::cout << "]";
        if (!x_hat.empty()) {
            std::cout << " x=[";
            for (int i = 0; i < model.domain.n; ++i) std::cout << (i ? "," : "") << x_hat[i];
            std::cout << "]";
        }
        std::cout << " latency_ms=" << ms << "\n";
    }
    if (batch.size() > 1)
        std::cout << "decoded " << batch.size() << " signals, mean latency "
                  << total_ms / batch.size() << " ms\n";
    return kExitOk;
}

int cmd_report(const std::vector<std::string> &csv_paths, const std::string &out_path) {
    std::vector<std::pair<std::string, std::vector<ResultRow>>> runs;
    for (const std::string &path : csv_paths) {
        std::ifstream in(path);
        if (!in) {
            std::cerr << "error: cannot open " << path << "\n";
            return kExitUsage;
        }
        try {
            runs.emplace_back(path, parse_results_csv(in, path));
        } catch (const std::runtime_error &e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitUsage;
        }
    }
    if (out_path.empty()) {
        write_cactus_csv(std::cout, runs);
    } else {
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "error: cannot open " << out_path << "\n";
            return kExitUsage;
        }
        write_cactus_csv(out, runs);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"train and verify neural decoders for sparse support recovery"};
    app.require_subcommand(1);

    std::string config_path, model_path, out_path, y_text, input_path, proof_log_path;
    std::vector<std::string> csv_paths;
    VerifyBudget budget;
    int workers = 1;
    bool deterministic = false;

    CLI::App *train = app.add_subcommand("train", "train a decoder from a config");
    train->add_option("--config", config_path, "experiment config (JSON)")->required();
    train->add_option("--out", out_path, "output model path")->required();

    CLI::App *verify = app.add_subcommand("verify", "prove all 2n support properties");
    verify->add_option("--model", model_path, "model JSON")->required();
    verify->add_option("--out", out_path, "results CSV path")->required();
    verify->add_option("--workers", workers, "parallel property proofs");
    verify->add_option("--budget-s", budget.budget_s, "per-property time budget (s)");
    verify->add_option("--max-subdomains", budget.max_subdomains, "per-property subdomain cap");
    verify->add_option("--seed", budget.seed, "sampling seed");
    verify->add_option("--samples", budget.samples_per_subdomain, "test points per subdomain");
    verify->add_option("--proof-log", proof_log_path, "JSONL subdomain trace (single worker)");
    verify->add_flag("--deterministic", deterministic, "single worker, reproducible traversal");

    CLI::App *decode = app.add_subcommand("decode", "decode measurements with a trained model");
    decode->add_option("--model", model_path, "model JSON")->required();
    decode->add_option("--y", y_text, "comma-separated measurement vector");
    decode->add_option("--input", input_path, "file with one measurement per line");

    CLI::App *report = app.add_subcommand("report", "cactus-plot CSV from results files");
    report->add_option("csv", csv_paths, "results CSV files")->required();
    report->add_option("--out", out_path, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (train->parsed()) return cmd_train(config_path, out_path);
        if (verify->parsed())
            return cmd_verify(model_path, out_path, budget, workers, deterministic,
                              proof_log_path);
        if (decode->parsed()) {
            if (y_text.empty() == input_path.empty()) {
                std::cerr << "error: decode needs exactly one of --y or --input\n";
                return kExitUsage;
            }
            return cmd_decode(model_path, y_text, input_path);
        }
        if (report->parsed()) return cmd_report(csv_paths, out_path);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
