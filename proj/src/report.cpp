#include "verisparse/report.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace verisparse {

namespace {

[[noreturn]] void fail(const std::string &name, int line, const std::string &what) {
    std::ostringstream oss;
    oss << name << ":" << line << ": " << what;
    throw std::runtime_error(oss.str());
}

}  // namespace

std::vector<ResultRow> parse_results_csv(std::istream &in, const std::string &name) {
    std::vector<ResultRow> rows;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (!header_seen) {
            if (line.rfind("property_coordinate,", 0) != 0)
                fail(name, lineno, "expected results CSV header");
            header_seen = true;
            continue;
        }
        // Six plain fields, then an optional quoted JSON witness (which may
        // itself contain commas).
        std::vector<std::string> fields;
        size_t pos = 0;
        for (int f = 0; f < 6; ++f) {
            size_t comma = line.find(',', pos);
            if (comma == std::string::npos) fail(name, lineno, "too few columns");
            fields.push_back(line.substr(pos, comma - pos));
            pos = comma + 1;
        }
        std::string witness = line.substr(pos);
        if (!witness.empty()) {
            if (witness.front() != '"' || witness.back() != '"' || witness.size() < 2)
                fail(name, lineno, "counterexample field must be quoted");
            witness = witness.substr(1, witness.size() - 2);
        }
        ResultRow row;
        try {
            row.coordinate = std::stoi(fields[0]);
            row.kind = fields[1];
            row.status = fields[2];
            row.wall_time_s = std::stod(fields[3]);
            row.subdomains = std::stoull(fields[4]);
            row.bound_calls = std::stoull(fields[5]);
        } catch (const std::exception &) {
            fail(name, lineno, "malformed numeric field");
        }
        if (row.kind != "on" && row.kind != "off") fail(name, lineno, "kind must be on|off");
        row.counterexample_json = witness;
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_cactus_csv(std::ostream &out,
                      const std::vector<std::pair<std::string, std::vector<ResultRow>>> &runs) {
    out << "run,kind,rank,wall_time_s,cumulative_time_s\n";
    for (const auto &[run, rows] : runs) {
        std::vector<const ResultRow *> done;
        for (const ResultRow &r : rows)
            if (r.status != "timeout") done.push_back(&r);
        std::stable_sort(done.begin(), done.end(), [](const ResultRow *a, const ResultRow *b) {
            return a->wall_time_s < b->wall_time_s;
        });
        double cumulative = 0.0;
        int rank = 0;
        for (const ResultRow *r : done) {
            cumulative += r->wall_time_s;
            ++rank;
            out << run << ',' << r->kind << ',' << rank << ',' << r->wall_time_s << ','
                << cumulative << '\n';
        }
    }
}

}  // namespace verisparse
