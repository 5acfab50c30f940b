#include "trace_csv.hpp"

#include <cmath>
#include <cstdio>

namespace drpg::cli {

std::string format_number(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string trace_row(const TraceRecord& rec) {
    std::string row = std::to_string(rec.iter);
    row += ',' + format_number(rec.objective);
    row += ',';
    if (rec.inner_gap_bound) {
        row += format_number(*rec.inner_gap_bound);
    }
    row += ',' + format_number(rec.epsilon_t);
    row += ',' + format_number(rec.policy_grad_norm);
    row += ',' + format_number(rec.best_so_far);
    row += ',' + format_number(rec.wall_ms);
    return row;
}

TraceCsvWriter::TraceCsvWriter(std::ostream& out) : out_(out) {
    out_ << kTraceHeader << '\n';
    out_.flush();
}

void TraceCsvWriter::write(const TraceRecord& rec) {
    out_ << trace_row(rec) << '\n';
    out_.flush();
}

} // namespace drpg::cli
