#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "olmpc/controllers.h"
#include "olmpc/experiment.h"
#include "olmpc/regret.h"

namespace olmpc {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

void write_records_csv(std::ostream& os, const std::vector<RegretRecord>& records);
void write_records_csv(const std::string& path,
                       const std::vector<RegretRecord>& records);
std::vector<RegretRecord> read_records_csv(std::istream& is);
std::vector<RegretRecord> read_records_csv(const std::string& path);

/// Columns: t, phase, x0.., xhat0.., u0.., cost_true, cost_internal,
/// theta_hat_fro_dist_to_center.
void write_trace_csv(std::ostream& os, const RunTrace& trace);
void write_trace_csv(const std::string& path, const RunTrace& trace);

/// One row per distinct T: log_T, log_median_R, fitted_log_R.
void write_plot_data(std::ostream& os, const AlgorithmSummary& summary);
void write_plot_data(const std::string& path, const AlgorithmSummary& summary);

void write_trajectory_csv(const std::string& path, const Trajectory& traj);
void write_failures_csv(const std::string& path,
                        const std::vector<RunFailure>& failures);

}  // namespace olmpc
