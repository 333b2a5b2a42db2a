#pragma once

#include <string>
#include <vector>

namespace otlab {

// Batch front end. Returns the process exit code: 0 success, 2 invalid
// configuration or input, 3 solver failure.
int run_cli(const std::vector<std::string>& args);

// CSV with a sidecar <path>.header.txt documenting the columns.
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows,
               const std::vector<std::string>& column_docs);

// Minimal self-contained line/scatter rendering of one series.
void write_svg_line(const std::string& path, const std::vector<double>& xs,
                    const std::vector<double>& ys, bool log_x, const std::string& title);

}  // namespace otlab
