#include "olmpc/csv_io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "olmpc/errors.h"

namespace olmpc {
namespace {

constexpr const char* kRecordsHeader =
    "algo,T,T0,seed,J_alg,J_opt,R_T,term_I,term_II,term_III,pistar_residual,"
    "runtime_ms";

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  return os;
}

void check_written(std::ostream& os, const std::string& path) {
  os.flush();
  if (!os) throw IoError("write to '" + path + "' failed");
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError("malformed number '" + s + "' in CSV");
  }
  return v;
}

template <class Int>
Int parse_int(const std::string& s) {
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError("malformed integer '" + s + "' in CSV");
  }
  return v;
}

void write_vector(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << format_double(v(i));
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_records_csv(std::ostream& os, const std::vector<RegretRecord>& records) {
  os << kRecordsHeader << '\n';
  for (const auto& r : records) {
    os << to_string(r.algo) << ',' << r.T << ',' << r.T0 << ',' << r.seed << ','
       << format_double(r.J_alg) << ',' << format_double(r.J_opt) << ','
       << format_double(r.R_T) << ',' << format_double(r.term_I) << ','
       << format_double(r.term_II) << ',' << format_double(r.term_III) << ','
       << format_double(r.pistar_residual) << ',' << format_double(r.runtime_ms)
       << '\n';
  }
}

void write_records_csv(const std::string& path,
                       const std::vector<RegretRecord>& records) {
  auto os = open_out(path);
  write_records_csv(os, records);
  check_written(os, path);
}

std::vector<RegretRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kRecordsHeader) {
    throw IoError("records CSV: missing or unexpected header");
  }
  std::vector<RegretRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 12) {
      throw IoError("records CSV: expected 12 columns, got " +
                    std::to_string(cells.size()));
    }
    RegretRecord r;
    try {
      r.algo = parse_algorithm(cells[0]);
    } catch (const ConfigError& e) {
      throw IoError(std::string("records CSV: ") + e.what());
    }
    r.T = parse_int<int>(cells[1]);
    r.T0 = parse_int<int>(cells[2]);
    r.seed = parse_int<std::uint64_t>(cells[3]);
    r.J_alg = parse_double(cells[4]);
    r.J_opt = parse_double(cells[5]);
    r.R_T = parse_double(cells[6]);
    r.term_I = parse_double(cells[7]);
    r.term_II = parse_double(cells[8]);
    r.term_III = parse_double(cells[9]);
    r.pistar_residual = parse_double(cells[10]);
    r.runtime_ms = parse_double(cells[11]);
    out.push_back(r);
  }
  return out;
}

std::vector<RegretRecord> read_records_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  return read_records_csv(is);
}

void write_trace_csv(std::ostream& os, const RunTrace& trace) {
  const Eigen::Index n = trace.center.n();
  const Eigen::Index m = trace.center.m();
  os << "t,phase";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i;
  for (Eigen::Index i = 0; i < n; ++i) os << ",xhat" << i;
  for (Eigen::Index j = 0; j < m; ++j) os << ",u" << j;
  os << ",cost_true,cost_internal,theta_hat_fro_dist_to_center\n";
  for (const auto& s : trace.steps) {
    os << s.t << ',' << to_string(s.phase);
    write_vector(os, s.x);
    write_vector(os, s.x_hat);
    write_vector(os, s.u);
    os << ',' << format_double(s.cost_true) << ',' << format_double(s.cost_internal)
       << ',' << format_double(s.model_distance) << '\n';
  }
}

void write_trace_csv(const std::string& path, const RunTrace& trace) {
  auto os = open_out(path);
  write_trace_csv(os, trace);
  check_written(os, path);
}

void write_plot_data(std::ostream& os, const AlgorithmSummary& summary) {
  os << "log_T,log_median_R,fitted_log_R\n";
  for (const auto& p : summary.medians) {
    const double lt = std::log(static_cast<double>(p.T));
    const double lr = p.median_R > 0.0 ? std::log(p.median_R)
                                       : std::numeric_limits<double>::quiet_NaN();
    const double fitted = summary.fit
                              ? summary.fit->intercept + summary.fit->slope * lt
                              : std::numeric_limits<double>::quiet_NaN();
    os << format_double(lt) << ',' << format_double(lr) << ','
       << format_double(fitted) << '\n';
  }
}

void write_plot_data(const std::string& path, const AlgorithmSummary& summary) {
  auto os = open_out(path);
  write_plot_data(os, summary);
  check_written(os, path);
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  auto os = open_out(path);
  const Eigen::Index n = traj.states.front().size();
  const Eigen::Index m = traj.inputs.empty() ? 0 : traj.inputs.front().size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i;
  for (Eigen::Index j = 0; j < m; ++j) os << ",u" << j;
  if (traj.observations) {
    for (Eigen::Index i = 0; i < n; ++i) os << ",y" << i;
  }
  os << '\n';
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    os << traj.t0 + static_cast<int>(k);
    write_vector(os, traj.states[k]);
    if (k < traj.inputs.size()) {
      write_vector(os, traj.inputs[k]);
    } else {
      for (Eigen::Index j = 0; j < m; ++j) os << ",nan";
    }
    if (traj.observations) write_vector(os, (*traj.observations)[k]);
    os << '\n';
  }
  check_written(os, path);
}

void write_failures_csv(const std::string& path,
                        const std::vector<RunFailure>& failures) {
  auto os = open_out(path);
  os << "algo,T,seed,message\n";
  for (const auto& f : failures) {
    std::string msg = f.message;
    for (char& c : msg) {
      if (c == ',' || c == '\n') c = ';';
    }
    os << to_string(f.algo) << ',' << f.T << ',' << f.seed << ',' << msg << '\n';
  }
  check_written(os, path);
}

}  // namespace olmpc
