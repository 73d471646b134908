#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "das/engine.hpp"

namespace das {

/// Reported quantities of one run.
struct Metrics {
  TimeNs avg_job_exec_time = 0;  // mean per-frame latency, injection to last task done
  TimeNs makespan = 0;
  double task_energy = 0;
  double sched_energy = 0;
  double total_energy = 0;  // nJ
  double edp = 0;  // total_energy * avg_job_exec_time, nJ*ns
  std::size_t decisions_f = 0;
  std::size_t decisions_s = 0;
  TimeNs avg_sched_latency = 0;  // per decision
  double avg_sched_energy = 0;  // per decision
  std::size_t jobs = 0;

  std::size_t decisions() const { return decisions_f + decisions_s; }
  double frac_f() const;
  double frac_s() const;
};

/// Throws on a trace with no jobs or no decisions.
Metrics reduce(const SimTrace& trace);

struct Comparison {
  double speedup = 0;  // a.time / b.time
  double edp_ratio = 0;  // b.edp / a.edp
  double edp_reduction() const { return 1.0 - edp_ratio; }
};

/// How `b` fares against baseline `a`.
Comparison compare(const Metrics& a, const Metrics& b);

/// One sweep cell.
struct SweepRow {
  std::string workload;
  double rate_mbps = 0;
  std::string policy;
  Metrics m;
};

std::string metrics_csv_header();
std::string sweep_to_csv(const std::vector<SweepRow>& rows, const std::string& preamble = {});
std::string decisions_to_csv(const std::vector<SweepRow>& rows, const std::string& preamble = {});
void export_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path,
                const std::string& preamble = {});

/// Fixed-width summary table for standard output.
std::string summary_table(const std::vector<SweepRow>& rows);

}  // namespace das
