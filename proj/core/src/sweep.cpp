#include <algorithm>
#include <atomic>
#include <exception>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ddpglab/harness.hpp"

namespace ddpglab {
namespace {

void write_optional(std::ostream& out, const std::optional<std::int64_t>& v) {
  if (v) out << *v;
}

std::optional<std::int64_t> parse_optional(const std::string& field) {
  if (field.empty()) return std::nullopt;
  return std::stoll(field);
}

nlohmann::json optional_json(const std::optional<std::int64_t>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

SweepRow summarize(std::uint64_t seed, const RunMetrics& run) {
  return SweepRow{seed,
                  run.success,
                  run.success_step,
                  run.first_reward_step,
                  run.final_policy_mean_action,
                  run.diverged};
}

SweepResult run_sweep(const RunConfig& base, std::span<const std::uint64_t> seeds,
                      const SweepOptions& options) {
  return run_sweep(base, seeds, options, run_training);
}

SweepResult run_sweep(const RunConfig& base, std::span<const std::uint64_t> seeds,
                      const SweepOptions& options,
                      const std::function<RunMetrics(const RunConfig&)>& runner) {
  if (seeds.empty()) throw std::invalid_argument("a sweep needs at least one seed");
  base.validate();
  const std::size_t n = seeds.size();
  std::vector<RunMetrics> runs(n);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> finished{0};
  std::mutex progress_mutex;
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        RunConfig cfg = base;
        cfg.seed = seeds[i];
        runs[i] = runner(cfg);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
      const std::size_t done = finished.fetch_add(1) + 1;
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(done, n);
      }
    }
  };

  const auto threads = static_cast<std::size_t>(std::max(1, options.parallelism));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < std::min(threads, n); ++k) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return seeds[a] < seeds[b]; });
  SweepResult result;
  for (std::size_t i : order) {
    result.rows.push_back(summarize(seeds[i], runs[i]));
    if (options.keep_metrics) result.runs.push_back(std::move(runs[i]));
  }
  return result;
}

double SweepSummary::success_rate() const {
  return runs == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(runs);
}

double SweepSummary::failure_rate() const {
  return runs == 0 ? 0.0 : static_cast<double>(failures) / static_cast<double>(runs);
}

SweepSummary summarize(std::span<const SweepRow> rows) {
  SweepSummary s;
  for (const auto& r : rows) {
    ++s.runs;
    if (r.diverged) {
      ++s.diverged;
    } else if (r.success) {
      ++s.successes;
    } else {
      ++s.failures;
    }
  }
  return s;
}

std::vector<std::pair<std::int64_t, double>> success_curve(std::span<const SweepRow> rows,
                                                           std::int64_t interval,
                                                           std::int64_t total_steps) {
  if (interval < 1) throw std::invalid_argument("interval must be positive");
  std::vector<std::pair<std::int64_t, double>> curve;
  if (rows.empty()) return curve;
  for (std::int64_t t = interval; t <= total_steps; t += interval) {
    const auto hits = std::count_if(rows.begin(), rows.end(), [t](const SweepRow& r) {
      return r.success && r.success_step && *r.success_step <= t;
    });
    curve.emplace_back(t, static_cast<double>(hits) / static_cast<double>(rows.size()));
  }
  return curve;
}

CorrelationReport first_reward_failure_correlation(std::span<const SweepRow> rows,
                                                   std::span<const std::int64_t> edges) {
  if (edges.empty() || !std::is_sorted(edges.begin(), edges.end())) {
    throw std::invalid_argument("bin edges must be non-empty and sorted");
  }
  CorrelationReport report;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    CorrelationBin bin;
    bin.lo = edges[k];
    if (k + 1 < edges.size()) bin.hi = edges[k + 1];
    report.bins.push_back(bin);
  }
  for (const auto& r : rows) {
    if (r.diverged) continue;
    const bool failed = !r.success;
    if (!r.first_reward_step) {
      ++report.never_rewarded;
      report.never_rewarded_failures += failed ? 1 : 0;
      continue;
    }
    const std::int64_t x = *r.first_reward_step;
    for (auto& bin : report.bins) {
      if (x > bin.lo && (!bin.hi || x <= *bin.hi)) {
        ++bin.count;
        bin.failures += failed ? 1 : 0;
        break;
      }
    }
  }
  for (auto& bin : report.bins) {
    if (bin.count > 0) {
      bin.failure_fraction = static_cast<double>(bin.failures) / static_cast<double>(bin.count);
    }
  }
  return report;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  const auto precision = out.precision(17);
  out << "seed,success,success_step,first_reward_step,final_policy_mean_action,diverged\n";
  for (const auto& r : rows) {
    out << r.seed << ',' << (r.success ? 1 : 0) << ',';
    write_optional(out, r.success_step);
    out << ',';
    write_optional(out, r.first_reward_step);
    out << ',' << r.final_policy_mean_action << ',' << (r.diverged ? 1 : 0) << '\n';
  }
  out.precision(precision);
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      line != "seed,success,success_step,first_reward_step,final_policy_mean_action,diverged") {
    throw std::invalid_argument("not a sweep CSV (unexpected header)");
  }
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 6) throw std::invalid_argument("malformed sweep CSV row: " + line);
    SweepRow r;
    r.seed = std::stoull(f[0]);
    r.success = f[1] == "1";
    r.success_step = parse_optional(f[2]);
    r.first_reward_step = parse_optional(f[3]);
    r.final_policy_mean_action = std::stod(f[4]);
    r.diverged = f[5] == "1";
    rows.push_back(r);
  }
  return rows;
}

void write_drift_csv_header(std::ostream& out) { out << "step,max_abs_q,max_abs_pi,seed\n"; }

void write_drift_csv_rows(std::ostream& out, std::uint64_t seed,
                          std::span<const DriftSample> trace) {
  const auto precision = out.precision(17);
  for (const auto& d : trace) {
    out << d.step << ',' << d.max_abs_q << ',' << d.max_abs_pi << ',' << seed << '\n';
  }
  out.precision(precision);
}

nlohmann::json run_to_json(const RunConfig& config, const RunMetrics& m) {
  using nlohmann::json;
  json phases = json::array();
  for (const auto& p : m.rewarded_per_training_phase) {
    phases.push_back({p.episode, p.end_step, p.iterations, p.rewarded});
  }
  json trace = json::array();
  for (const auto& d : m.drift_trace) trace.push_back({d.step, d.max_abs_q, d.max_abs_pi});
  json snapshots = json::array();
  for (const auto& s : m.snapshots) {
    snapshots.push_back({{"step", s.step},
                         {"n_states", s.grid.n_states},
                         {"n_actions", s.grid.n_actions},
                         {"q", s.q},
                         {"pi", s.pi}});
  }
  json metrics = {
      {"success", m.success},
      {"success_step", optional_json(m.success_step)},
      {"first_reward_step", optional_json(m.first_reward_step)},
      {"diverged", m.diverged},
      {"divergence_message", m.divergence_message},
      {"steps_run", m.steps_run},
      {"episodes", m.episodes},
      {"batches_drawn", m.batches_drawn},
      {"rewarded_sampled", m.rewarded_sampled},
      {"final_policy_mean_action", m.final_policy_mean_action},
      {"rewarded_per_training_phase_columns", {"episode", "end_step", "iterations", "rewarded"}},
      {"rewarded_per_training_phase", std::move(phases)},
      {"drift_trace_columns", {"step", "max_abs_q", "max_abs_pi"}},
      {"drift_trace", std::move(trace)},
      {"critic_snapshots", std::move(snapshots)},
  };
  return json{{"schema_version", kRunSchemaVersion},
              {"config", to_json(config)},
              {"metrics", std::move(metrics)}};
}

}  // namespace ddpglab
