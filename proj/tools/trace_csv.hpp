#pragma once

#include "drpg/drpg.hpp"

#include <ostream>
#include <string>

namespace drpg::cli {

/// Shortest text that reads back to the same double ("%.17g"); NaN as "nan".
std::string format_number(double x);

inline constexpr const char* kTraceHeader =
    "iter,objective,inner_gap_bound,epsilon_t,policy_grad_norm,best_so_far,wall_ms";

/// One CSV row per record; an uncertified gap is left empty.
std::string trace_row(const TraceRecord& rec);

/// Writes the header on construction and flushes after every row.
class TraceCsvWriter {
public:
    explicit TraceCsvWriter(std::ostream& out);
    void write(const TraceRecord& rec);

private:
    std::ostream& out_;
};

} // namespace drpg::cli
