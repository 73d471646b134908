#include "das/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "das/io.hpp"

namespace das {

double Metrics::frac_f() const {
  return decisions() ? static_cast<double>(decisions_f) / static_cast<double>(decisions()) : 0.0;
}

double Metrics::frac_s() const {
  return decisions() ? static_cast<double>(decisions_s) / static_cast<double>(decisions()) : 0.0;
}

Metrics reduce(const SimTrace& trace) {
  if (trace.jobs.empty() || trace.decisions.empty()) throw Error("cannot reduce an empty trace");
  Metrics m;
  double latency_sum = 0;
  TimeNs first = trace.jobs.front().arrival;
  TimeNs last = 0;
  for (const auto& j : trace.jobs) {
    latency_sum += j.latency();
    first = std::min(first, j.arrival);
    last = std::max(last, j.finish);
  }
  m.jobs = trace.jobs.size();
  m.avg_job_exec_time = latency_sum / static_cast<double>(m.jobs);
  m.makespan = last - first;

  TimeNs sched_latency = 0;
  for (const auto& inv : trace.invocations) sched_latency += inv.latency;
  for (const auto& d : trace.decisions)
    (d.tag == PolicyTag::Fast ? m.decisions_f : m.decisions_s) += 1;
  m.task_energy = trace.task_energy;
  m.sched_energy = trace.sched_energy;
  m.total_energy = m.task_energy + m.sched_energy;
  m.edp = m.total_energy * m.avg_job_exec_time;
  const double n = static_cast<double>(m.decisions());
  m.avg_sched_latency = sched_latency / n;
  m.avg_sched_energy = m.sched_energy / n;
  return m;
}

Comparison compare(const Metrics& a, const Metrics& b) {
  if (!(b.avg_job_exec_time > 0) || !(a.edp > 0))
    throw Error("compare: zero execution time or EDP");
  return {a.avg_job_exec_time / b.avg_job_exec_time, b.edp / a.edp};
}

std::string metrics_csv_header() {
  return "workload,rate_mbps,policy,avg_exec_ns,makespan_ns,total_energy_nj,task_energy_nj,"
         "sched_energy_nj,edp_nj_ns,jobs,decisions,frac_f,frac_s,avg_sched_latency_ns,"
         "avg_sched_energy_nj";
}

namespace {

std::string row_key(const SweepRow& r) { return r.workload + ',' + fmt_double(r.rate_mbps) + ',' + r.policy; }

}  // namespace

std::string sweep_to_csv(const std::vector<SweepRow>& rows, const std::string& preamble) {
  std::ostringstream os;
  os << preamble << metrics_csv_header() << '\n';
  for (const auto& r : rows) {
    const auto& m = r.m;
    os << row_key(r) << ',' << fmt_double(m.avg_job_exec_time) << ',' << fmt_double(m.makespan)
       << ',' << fmt_double(m.total_energy) << ',' << fmt_double(m.task_energy) << ','
       << fmt_double(m.sched_energy) << ',' << fmt_double(m.edp) << ',' << m.jobs << ','
       << m.decisions() << ',' << fmt_double(m.frac_f()) << ',' << fmt_double(m.frac_s()) << ','
       << fmt_double(m.avg_sched_latency) << ',' << fmt_double(m.avg_sched_energy) << '\n';
  }
  return os.str();
}

std::string decisions_to_csv(const std::vector<SweepRow>& rows, const std::string& preamble) {
  std::ostringstream os;
  os << preamble << "workload,rate_mbps,policy,decisions_f,decisions_s,frac_f,frac_s,"
                    "sched_energy_nj\n";
  for (const auto& r : rows)
    os << row_key(r) << ',' << r.m.decisions_f << ',' << r.m.decisions_s << ','
       << fmt_double(r.m.frac_f()) << ',' << fmt_double(r.m.frac_s()) << ','
       << fmt_double(r.m.sched_energy) << '\n';
  return os.str();
}

void export_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path,
                const std::string& preamble) {
  write_text(path, sweep_to_csv(rows, preamble));
}

std::string summary_table(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %10s %-14s %12s %14s %8s %10s\n", "workload", "Mbps",
                "policy", "exec(ns)", "energy(nJ)", "S-frac", "sched(ns)");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-10s %10.1f %-14s %12.1f %14.1f %8.3f %10.2f\n",
                  r.workload.c_str(), r.rate_mbps, r.policy.c_str(), r.m.avg_job_exec_time,
                  r.m.total_energy, r.m.frac_s(), r.m.avg_sched_latency);
    os << buf;
  }
  return os.str();
}

}  // namespace das
