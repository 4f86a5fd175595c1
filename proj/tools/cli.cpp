#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ddpglab/harness.hpp"
#include "ddpglab/net.hpp"
#include "ddpglab/oracle.hpp"

namespace ddpglab::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Usage-level failures (bad config, bad flags, unwritable output) exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  ConfigSources sources;
  std::string out_dir;
};

void add_common(CLI::App& cmd, Common& c, bool run_flags = true) {
  cmd.add_option("--config", c.sources.config_path, "flat JSON config file")->check(CLI::ExistingFile);
  cmd.add_option("--out", c.out_dir, std::string("output directory (default $") + kOutEnv +
                                         " or ./ddpglab_out)");
  if (!run_flags) return;
  auto& src = c.sources;
  cmd.add_option("--seed", src.seed, "root seed");
  cmd.add_option("--noise", src.noise, "none | probabilistic | ou");
  cmd.add_option("--agent", src.agent, "ddpg | ddpg-argmax | regression");
  cmd.add_option("--gamma", src.gamma, "discount factor");
  cmd.add_option("overrides", src.overrides, "key=value config overrides (applied last)");
}

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw std::invalid_argument("not a seed: '" + std::string(s) + "'");
  }
  return v;
}

RunConfig resolve(const Common& c, RunConfig base) {
  try {
    return resolve_run_config(c.sources, std::move(base));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

fs::path output_dir(const Common& c) {
  fs::path dir = c.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv(kOutEnv);
    dir = env && *env ? env : "ddpglab_out";
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw UsageError("cannot create output directory " + dir.string());
  }
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& j) { open_out(path) << j.dump(2) << '\n'; }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

int default_parallelism() {
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::function<void(std::size_t, std::size_t)> progress_printer(std::ostream& err) {
  return [&err](std::size_t done, std::size_t total) {
    const std::size_t stride = std::max<std::size_t>(1, total / 10);
    if (done % stride == 0 || done == total) err << "  " << done << "/" << total << " runs\n";
  };
}


// ---- subcommands ------------------------------------------------------------

int cmd_train(const Common& c, std::ostream& out) {
  const RunConfig cfg = resolve(c, RunConfig{});
  const fs::path dir = output_dir(c);
  write_json(dir / "config.json", to_json(cfg));
  const RunMetrics m = run_training(cfg);
  write_json(dir / "run.json", run_to_json(cfg, m));
  if (!m.snapshots.empty()) {
    auto csv = open_out(dir / "snapshot.csv");
    write_snapshot_csv_header(csv);
    for (const auto& s : m.snapshots) write_snapshot_csv_rows(csv, s);
  }
  out << "seed " << cfg.seed << ": "
      << (m.diverged ? "diverged" : m.success ? "success" : "failed");
  if (m.success_step) out << " at step " << *m.success_step;
  out << ", first reward "
      << (m.first_reward_step ? std::to_string(*m.first_reward_step) : std::string("never"))
      << ", mean pi " << m.final_policy_mean_action << '\n';
  return kExitOk;
}

json sweep_summary(const RunConfig& cfg, const SweepResult& r) {
  const SweepSummary s = summarize(r.rows);
  json curve = json::array();
  for (const auto& [t, rate] : success_curve(r.rows, cfg.success_check_interval, cfg.total_steps)) {
    curve.push_back({t, rate});
  }
  const CorrelationReport corr = first_reward_failure_correlation(r.rows, kFirstRewardBinEdges);
  json bins = json::array();
  for (const auto& b : corr.bins) {
    bins.push_back({{"lo", b.lo},
                    {"hi", b.hi ? json(*b.hi) : json(nullptr)},
                    {"count", b.count},
                    {"failures", b.failures},
                    {"failure_fraction", optional_json(b.failure_fraction)}});
  }
  json steady = json::array();
  for (std::size_t i = 0; i < r.runs.size(); ++i) {
    if (!r.runs[i].failed()) continue;
    const auto mean = mean_rewarded_per_phase(r.runs[i], cfg.env.max_episode_length,
                                              cfg.total_steps / 2);
    steady.push_back({{"seed", r.rows[i].seed}, {"mean_rewarded_per_phase", optional_json(mean)}});
  }
  return {{"runs", s.runs},
          {"successes", s.successes},
          {"failures", s.failures},
          {"diverged", s.diverged},
          {"success_rate", s.success_rate()},
          {"failure_rate", s.failure_rate()},
          {"success_curve_columns", {"step", "success_rate"}},
          {"success_curve", std::move(curve)},
          {"first_reward_bins", std::move(bins)},
          {"never_rewarded", corr.never_rewarded},
          {"never_rewarded_failures", corr.never_rewarded_failures},
          {"failed_run_steady_state", std::move(steady)}};
}

int cmd_sweep(const Common& c, const std::string& seeds_text, int parallel, bool phases,
              std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve(c, RunConfig{});
  const auto seeds = parse_seeds(seeds_text);
  const fs::path dir = output_dir(c);
  write_json(dir / "config.json", to_json(cfg));
  SweepOptions opts;
  opts.parallelism = parallel > 0 ? parallel : default_parallelism();
  opts.progress = progress_printer(err);
  const SweepResult r = run_sweep(cfg, seeds, opts);
  {
    auto csv = open_out(dir / "sweep.csv");
    write_sweep_csv(csv, r.rows);
  }
  if (phases) {
    auto csv = open_out(dir / "phases.csv");
    csv << "seed,episode,end_step,iterations,rewarded\n";
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
      for (const auto& p : r.runs[i].rewarded_per_training_phase) {
        csv << r.rows[i].seed << ',' << p.episode << ',' << p.end_step << ',' << p.iterations
            << ',' << p.rewarded << '\n';
      }
    }
  }
  const json summary = sweep_summary(cfg, r);
  write_json(dir / "summary.json", summary);
  out << summary["runs"] << " runs: " << summary["successes"] << " succeeded, "
      << summary["failures"] << " failed, " << summary["diverged"] << " diverged\n";
  return kExitOk;
}

int cmd_drift(const Common& c, const std::string& seeds_text, int parallel, std::ostream& out,
              std::ostream& err) {
  RunConfig cfg = resolve(c, drift_defaults());
  const auto seeds = parse_seeds(seeds_text);
  const fs::path dir = output_dir(c);
  write_json(dir / "config.json", to_json(cfg));
  SweepOptions opts;
  opts.parallelism = parallel > 0 ? parallel : default_parallelism();
  opts.progress = progress_printer(err);
  const SweepResult r = run_sweep(cfg, seeds, opts, run_drift);
  auto csv = open_out(dir / "drift.csv");
  write_drift_csv_header(csv);
  json runs = json::array();
  int saturated = 0, right = 0;
  for (std::size_t i = 0; i < r.runs.size(); ++i) {
    const auto& trace = r.runs[i].drift_trace;
    write_drift_csv_rows(csv, r.rows[i].seed, trace);
    const DriftVerdict v = assess_drift(r.runs[i]);
    saturated += v.saturated ? 1 : 0;
    right += v.drift_right ? 1 : 0;
    runs.push_back({{"seed", r.rows[i].seed},
                    {"peak_max_abs_pi", v.peak_max_abs_pi},
                    {"late_q_change", v.late_q_change},
                    {"final_policy_mean_action", r.runs[i].final_policy_mean_action},
                    {"diverged", r.runs[i].diverged}});
  }
  write_json(dir / "summary.json",
             {{"runs", r.runs.size()}, {"saturated", saturated}, {"drift_right", right},
              {"per_run", std::move(runs)}});
  out << r.runs.size() << " drift runs: " << saturated << " saturated, " << right
      << " drifted right\n";
  return kExitOk;
}

int cmd_oracle(const Common& c, double gamma, std::ostream& out) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw UsageError("--gamma must lie in (0, 1)");
  const fs::path dir = output_dir(c);
  const StateActionGrid grid;
  write_json(dir / "config.json",
             {{"gamma", gamma}, {"n_states", grid.n_states}, {"n_actions", grid.n_actions}});
  const auto checks = run_oracle_suite(gamma);
  json report = json::array();
  bool all = true;
  for (const auto& chk : checks) {
    all &= chk.passed;
    out << (chk.passed ? "PASS " : "FAIL ") << chk.name;
    if (!chk.detail.empty()) out << " [" << chk.detail << "]";
    out << '\n';
    report.push_back({{"name", chk.name}, {"passed", chk.passed}, {"detail", chk.detail}});
  }
  write_json(dir / "oracle.json", {{"gamma", gamma}, {"passed", all}, {"checks", report}});
  {
    auto csv = open_out(dir / "qpi_right.csv");
    write_qtable_csv(csv, compute_qpi(rightmost_policy, grid, gamma));
  }
  {
    auto csv = open_out(dir / "qpi_optimal.csv");
    write_qtable_csv(csv, compute_qpi(optimal_action, grid, gamma));
  }
  return all ? kExitOk : kExitCheckFailed;
}

int cmd_snapshot(const Common& c, const std::vector<std::int64_t>& at, bool analytic,
                 std::ostream& out) {
  const fs::path dir = output_dir(c);
  if (analytic) {
    write_json(dir / "config.json", {{"analytic", "indicator critic, pi = 0.1"}});
    auto csv = open_out(dir / "snapshot.csv");
    write_snapshot_csv_header(csv);
    write_snapshot_csv_rows(csv, export_snapshot(indicator_critic, rightmost_policy, ProbeGrid{}, 0));
    out << "wrote analytic deadlock pair\n";
    return kExitOk;
  }
  RunConfig cfg = resolve(c, RunConfig{});
  if (!at.empty()) cfg.snapshot_steps = at;
  if (cfg.snapshot_steps.empty()) cfg.snapshot_steps = {cfg.total_steps};
  // Snapshots must be reachable, so the success stop is disabled.
  cfg.success_check_interval = cfg.total_steps + 1;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  write_json(dir / "config.json", to_json(cfg));
  const RunMetrics m = run_training(cfg);
  auto csv = open_out(dir / "snapshot.csv");
  write_snapshot_csv_header(csv);
  for (const auto& s : m.snapshots) write_snapshot_csv_rows(csv, s);
  out << m.snapshots.size() << " snapshots written\n";
  return kExitOk;
}

int cmd_grad_check(const Common& c, int nets, std::uint64_t seed, std::ostream& out) {
  const fs::path dir = output_dir(c);
  write_json(dir / "config.json", {{"nets", nets}, {"seed", seed}, {"step", 1e-5}});
  Rng rng(seed);
  const GradientCheckSummary s = random_gradient_checks(nets, rng);
  // Kink-straddling pairs are excluded; more than 1% of them would mean the
  // check no longer covers the network.
  const bool ok = s.max_relative_error <= 1e-4 && s.kink_skipped * 100 <= s.compared;
  write_json(dir / "grad_check.json", {{"nets", s.nets},
                                       {"max_relative_error", s.max_relative_error},
                                       {"worst_net", s.worst_net},
                                       {"compared", s.compared},
                                       {"kink_skipped", s.kink_skipped},
                                       {"passed", ok}});
  out << (ok ? "PASS" : "FAIL") << " gradient check over " << s.nets
      << " nets: max relative error " << s.max_relative_error << " (" << s.compared
      << " derivatives, " << s.kink_skipped << " skipped at relu kinks)\n";
  return ok ? kExitOk : kExitCheckFailed;
}

}  // namespace

RunConfig resolve_run_config(const ConfigSources& c, RunConfig base) {
  try {
    if (!c.config_path.empty()) {
      std::ifstream in(c.config_path);
      if (!in) throw std::invalid_argument("cannot read config " + c.config_path);
      base = config_from_json(json::parse(in), base);
    }
    if (!c.noise.empty()) apply_override(base, "noise=" + c.noise);
    if (!c.agent.empty()) apply_override(base, "actor_update=" + c.agent);
    if (c.gamma) apply_override(base, "gamma=" + json(*c.gamma).dump());
    if (c.seed) base.seed = *c.seed;
    for (const auto& o : c.overrides) apply_override(base, o);
    base.validate();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed config: ") + e.what());
  }
  return base;
}

std::vector<std::uint64_t> parse_seeds(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const std::uint64_t lo = parse_u64(text.substr(0, dots));
    const std::uint64_t hi = parse_u64(text.substr(dots + 2));
    if (hi < lo) throw std::invalid_argument("empty seed range " + std::string(text));
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    seeds.push_back(parse_u64(text.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return seeds;
}

int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err) {
  CLI::App app{"ddpglab: DDPG deadlock experiments on a 1D toy problem"};
  app.require_subcommand(1);

  Common common;
  std::string seeds_text;
  int parallel = 0;
  bool phases = false;
  double oracle_gamma = 0.99;
  std::vector<std::int64_t> snapshot_at;
  bool analytic = false;
  int nets = 100;
  std::uint64_t grad_seed = 0;

  auto* train = app.add_subcommand("train", "one training run, writes run.json");
  add_common(*train, common);

  auto* sweep = app.add_subcommand("sweep", "one run per seed, writes sweep.csv and summary.json");
  add_common(*sweep, common);
  sweep->add_option("--seeds", seeds_text, "a..b or a,b,c")->required();
  sweep->add_option("--parallel", parallel, "worker threads (default: all cores)");
  sweep->add_flag("--phases", phases, "also write per-phase rewarded counts (phases.csv)");

  auto* drift = app.add_subcommand("drift", "reward-free drift runs, writes drift.csv");
  add_common(*drift, common);
  drift->add_option("--seeds", seeds_text, "a..b or a,b,c")->default_val("0..19");
  drift->add_option("--parallel", parallel, "worker threads (default: all cores)");

  auto* oracle = app.add_subcommand("oracle", "exact Q^pi and fixed-point checks");
  add_common(*oracle, common, false);
  oracle->add_option("--gamma", oracle_gamma, "discount factor")->default_val(0.99);

  auto* snapshot = app.add_subcommand("snapshot", "critic and actor over the probe grid");
  add_common(*snapshot, common);
  snapshot->add_option("--at", snapshot_at, "training steps to snapshot")->delimiter(',');
  snapshot->add_flag("--analytic", analytic, "dump the analytic deadlock pair instead");

  auto* grad = app.add_subcommand("grad-check", "finite-difference gradient check");
  add_common(*grad, common, false);
  grad->add_option("--nets", nets, "number of random networks")->default_val(100);
  grad->add_option("--seed", grad_seed, "rng seed")->default_val(0);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(common, out);
    if (*sweep) return cmd_sweep(common, seeds_text, parallel, phases, out, err);
    if (*drift) return cmd_drift(common, seeds_text, parallel, out, err);
    if (*oracle) return cmd_oracle(common, oracle_gamma, out);
    if (*snapshot) return cmd_snapshot(common, snapshot_at, analytic, out);
    if (*grad) return cmd_grad_check(common, nets, grad_seed, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

int parse_and_dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return parse_and_dispatch(args, std::cout, std::cerr);
}

}  // namespace ddpglab::cli
