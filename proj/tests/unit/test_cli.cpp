#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "verisparse/decoder.hpp"
#include "verisparse/oracles.hpp"
#include "verisparse/report.hpp"

using namespace verisparse;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string output;
};

fs::path scratch() {
    static fs::path dir = [] {
        char tmpl[] = "/tmp/verisparse_cli_test_XXXXXX";
        return fs::path(mkdtemp(tmpl));
    }();
    return dir;
}

CliResult run_cli(const std::string &args) {
    fs::path out = scratch() / "out.txt";
    std::string cmd =
        std::string(VERISPARSE_CLI_PATH) + " " + args + " >" + out.string() + " 2>&1";
    int status = std::system(cmd.c_str());
    std::ifstream in(out);
    std::stringstream buf;
    buf << in.rdbuf();
    return {status == -1 ? -1 : WEXITSTATUS(status), buf.str()};
}

void write_file(const fs::path &p, const std::string &text) {
    std::ofstream out(p);
    out << text;
}

// A problem small enough to train in well under a second.
const char *kTinyConfig = R"({
  "problem": {"n": 6, "m1": 4, "l": 1, "eps": 0.5},
  "architecture": {"width": 16, "hidden_layers": 1},
  "training": {"steps": 3000, "lr_final_fraction": 0.05, "pgd_iterations": 10, "pgd_restarts": 1,
               "corner_batch": 8, "grad_points": 4, "uniform_batch": 8,
               "reg_lambda": 0.0, "l1_lambda": 0.0, "learn_sensing": true, "seed": 3},
  "verification": {"budget_s": 120}
})";

fs::path trained_model() {
    static fs::path model = [] {
        fs::path cfg = scratch() / "tiny.json";
        fs::path out = scratch() / "tiny_model.json";
        write_file(cfg, kTinyConfig);
        CliResult res = run_cli("train --config " + cfg.string() + " --out " + out.string());
        REQUIRE(res.code == 0);
        return out;
    }();
    return model;
}

}  // namespace

TEST_CASE("malformed config is a usage error and writes no model") {
    fs::path cfg = scratch() / "bad.json";
    fs::path out = scratch() / "never_written.json";
    write_file(cfg, "{ this is not json");
    CliResult res = run_cli("train --config " + cfg.string() + " --out " + out.string());
    CHECK(res.code == 1);
    CHECK_FALSE(fs::exists(out));

    write_file(cfg, R"({"problem": {"n": 6, "m1": 4, "l": 1, "mystery": 1}})");
    CHECK(run_cli("train --config " + cfg.string() + " --out " + out.string()).code == 1);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("train writes a loadable model and a training log") {
    fs::path model = trained_model();
    CHECK(fs::exists(model));
    CHECK(fs::exists(model.string() + ".log"));
    Model loaded = load_model(model.string());
    CHECK(loaded.domain.n == 6);

    std::ifstream log(model.string() + ".log");
    std::string header;
    std::getline(log, header);
    CHECK(header == "step,loss,attack_loss,reg,unstable_neurons");
}

TEST_CASE("verify proves the tiny model and is deterministic modulo wall time") {
    fs::path model = trained_model();
    fs::path csv_a = scratch() / "res_a.csv";
    fs::path csv_b = scratch() / "res_b.csv";
    CliResult a = run_cli("verify --model " + model.string() + " --out " + csv_a.string() +
                          " --deterministic --seed 11");
    REQUIRE(a.code == 0);
    CliResult b = run_cli("verify --model " + model.string() + " --out " + csv_b.string() +
                          " --deterministic --seed 11");
    REQUIRE(b.code == 0);

    auto strip_wall_time = [](const fs::path &p) {
        std::ifstream in(p);
        std::vector<ResultRow> rows = parse_results_csv(in, p.string());
        std::ostringstream oss;
        for (const ResultRow &r : rows)
            oss << r.coordinate << '|' << r.kind << '|' << r.status << '|' << r.subdomains << '|'
                << r.bound_calls << '|' << r.counterexample_json << '\n';
        return oss.str();
    };
    CHECK(strip_wall_time(csv_a) == strip_wall_time(csv_b));

    std::ifstream in(csv_a);
    std::vector<ResultRow> rows = parse_results_csv(in, csv_a.string());
    CHECK(rows.size() == 12);  // 2n
    for (const ResultRow &r : rows) CHECK(r.status == "proved");
}

TEST_CASE("decode reports the support and reconstructs the signal") {
    fs::path model_path = trained_model();
    Model model = load_model(model_path.string());
    std::vector<double> x(6, 0.0);
    x[2] = 0.8;
    std::vector<double> y = measure(model.sensing, x);
    std::ostringstream yarg;
    for (size_t j = 0; j < y.size(); ++j) yarg << (j ? "," : "") << y[j];

    CliResult res = run_cli("decode --model " + model_path.string() + " --y " + yarg.str());
    REQUIRE(res.code == 0);
    CHECK(res.output.find("support=[2]") != std::string::npos);
    CHECK(res.output.find("latency_ms=") != std::string::npos);

    // Reconstruction recovers x to high precision.
    size_t xpos = res.output.find(" x=[");
    REQUIRE(xpos != std::string::npos);
    size_t close = res.output.find(']', xpos + 4);
    std::string xs = res.output.substr(xpos + 4, close - xpos - 4);
    for (char &ch : xs)
        if (ch == ',') ch = ' ';
    std::stringstream ss(xs);
    std::vector<double> xhat;
    double v;
    while (ss >> v) xhat.push_back(v);
    REQUIRE(xhat.size() == 6);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(xhat[i] - x[i]) < 1e-6);

    // Dimension mismatch is a usage error.
    CHECK(run_cli("decode --model " + model_path.string() + " --y 1.0,2.0").code == 1);
}

TEST_CASE("decode handles measurement batches") {
    fs::path model_path = trained_model();
    Model model = load_model(model_path.string());
    fs::path batch = scratch() / "batch.txt";
    {
        std::ofstream out(batch);
        Rng rng(5);
        for (int row = 0; row < 20; ++row) {
            std::vector<double> x = sample_in_subdomain(model.domain, Subdomain::root(), rng);
            std::vector<double> y = measure(model.sensing, x);
            for (size_t j = 0; j < y.size(); ++j) out << (j ? "," : "") << y[j];
            out << "\n";
        }
    }
    CliResult res = run_cli("decode --model " + model_path.string() + " --input " +
                            batch.string());
    REQUIRE(res.code == 0);
    int rows = 0;
    std::istringstream in(res.output);
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("support=", 0) == 0) ++rows;
    CHECK(rows == 20);
}

TEST_CASE("report emits a cactus CSV with full rank coverage") {
    fs::path model = trained_model();
    fs::path csv = scratch() / "res_a.csv";
    if (!fs::exists(csv)) {
        REQUIRE(run_cli("verify --model " + model.string() + " --out " + csv.string() +
                        " --deterministic")
                    .code == 0);
    }
    fs::path cactus = scratch() / "cactus.csv";
    CliResult res =
        run_cli("report " + csv.string() + " --out " + cactus.string());
    REQUIRE(res.code == 0);

    std::ifstream in(cactus);
    std::string line;
    std::getline(in, line);
    CHECK(line == "run,kind,rank,wall_time_s,cumulative_time_s");
    int last_rank = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++last_rank;
    }
    CHECK(last_rank == 12);  // final rank = 2n for a fully proved run

    // Malformed input names the offending line.
    fs::path bad = scratch() / "bad.csv";
    write_file(bad,
               "property_coordinate,kind,status,wall_time_s,subdomains,bound_calls,"
               "counterexample_json\nnot,a,row\n");
    CliResult err = run_cli("report " + bad.string());
    CHECK(err.code == 1);
    CHECK(err.output.find("bad.csv:2") != std::string::npos);
}

TEST_CASE("verify writes a replayable proof log on request") {
    fs::path model = trained_model();
    fs::path csv = scratch() / "res_log.csv";
    fs::path log = scratch() / "proof.jsonl";
    CliResult res = run_cli("verify --model " + model.string() + " --out " + csv.string() +
                            " --deterministic --proof-log " + log.string());
    REQUIRE(res.code == 0);
    std::ifstream in(log);
    std::string line;
    int records = 0, proved = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json rec = nlohmann::json::parse(line);
        REQUIRE(rec.contains("coordinate"));
        REQUIRE(rec.contains("event"));
        REQUIRE(rec.contains("on"));
        proved += rec["event"] == "proved";
        ++records;
    }
    CHECK(records > 0);
    CHECK(proved > 0);
}
