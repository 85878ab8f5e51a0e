#ifndef VERISPARSE_REPORT_HPP
#define VERISPARSE_REPORT_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace verisparse {

struct ResultRow {
    int coordinate = 0;
    std::string kind;
    std::string status;
    double wall_time_s = 0.0;
    uint64_t subdomains = 0;
    uint64_t bound_calls = 0;
    std::string counterexample_json;
};

// Parses a results CSV as written by `verify`. Errors name the offending line.
std::vector<ResultRow> parse_results_csv(std::istream &in, const std::string &name);

// Cactus series: per input run, completed properties (proved or refuted)
// sorted by wall time, with rank and cumulative time. Columns:
// run,kind,rank,wall_time_s,cumulative_time_s
void write_cactus_csv(std::ostream &out,
                      const std::vector<std::pair<std::string, std::vector<ResultRow>>> &runs);

}  // namespace verisparse

#endif
