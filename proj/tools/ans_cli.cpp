// ans_cli: run, sweep and inspect partition-learning experiments.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ans/ans.hpp"

namespace {

std::string partition_name(const ans::DnnDescriptor& desc, int p) {
  if (p == 0) return "input";
  if (p == desc.on_device_index()) return "on-device";
  return desc.units[static_cast<std::size_t>(p - 1)].name;
}

ans::DeviceProfile parse_device(const std::string& spec) {
  std::vector<double> v;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    auto comma = spec.find(',', pos);
    v.push_back(std::stod(spec.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (v.size() != 4) throw std::invalid_argument("--device expects conv,fc,act,overhead");
  return {v[0], v[1], v[2], v[3]};
}

int cmd_run(const std::string& scenario_path, std::optional<std::uint64_t> seed, const std::string& policy,
            const std::string& out_trace, const std::string& out_summary) {
  ans::Scenario sc = ans::load_scenario(scenario_path);
  if (!policy.empty()) sc.policy = ans::parse_policy(policy, "--policy");
  const std::uint64_t s = seed.value_or(sc.seed);
  const ans::Trace tr = ans::run(sc, s);
  const ans::MetricsSummary m = ans::summarize(tr);
  if (!out_trace.empty()) ans::write_trace_csv(tr, std::filesystem::path{out_trace});
  const auto js = ans::to_json(m);
  if (!out_summary.empty()) {
    std::ofstream out(out_summary);
    if (!out) throw std::runtime_error("cannot write " + out_summary);
    out << js.dump(2) << '\n';
  }
  std::cout << "policy=" << ans::to_string(m.policy) << " seed=" << s << " frames=" << m.horizon
            << " regret_ms=" << m.total_regret << " mean_delay_ms=" << m.delay.overall
            << " mape_percent=" << m.mape << " forced=" << m.forced_frames
            << " on_device=" << m.on_device_frames << '\n';
  for (const auto& a : m.adaptation) {
    std::cout << "change@" << a.change_frame << " adaptation="
              << (a.frames ? std::to_string(*a.frames) : std::string{"not-adapted"}) << '\n';
  }
  return 0;
}

int cmd_sweep(const std::string& scenario_path, const std::vector<std::string>& params, int seeds,
              std::optional<std::uint64_t> base_seed, unsigned threads, const std::string& out_path) {
  const ans::Scenario sc = ans::load_scenario(scenario_path);
  std::vector<ans::ParameterAxis> axes;
  for (const auto& p : params) axes.push_back(ans::parse_axis(p));
  const auto result = ans::sweep(sc, axes, seeds, base_seed.value_or(sc.seed), threads);
  if (out_path.empty() || out_path == "-") {
    ans::write_sweep_csv(result, std::cout);
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    ans::write_sweep_csv(result, out);
    std::cout << "wrote " << result.rows.size() << " rows + " << result.points.size() << " means to "
              << out_path << '\n';
  }
  return 0;
}

int cmd_oracle(const std::string& scenario_path) {
  const ans::Scenario sc = ans::load_scenario(scenario_path);
  const auto prep = ans::prepare(sc);
  ans::Environment env(sc.env, prep.raw_contexts, sc.seed);
  auto report = [&](const std::string& label, int frame) {
    std::vector<double> total(prep.d_f.size());
    for (std::size_t p = 0; p < total.size(); ++p) {
      total[p] = prep.d_f[p] + env.expected_edge_delay_at(static_cast<int>(p), frame);
    }
    const int best = ans::oracle_select(total);
    std::cout << label << " p*=" << best << " (" << partition_name(sc.descriptor, best) << ") total_ms="
              << std::setprecision(6) << total[static_cast<std::size_t>(best)]
              << " on_device_ms=" << total.back() << " edge_only_ms=" << total.front() << '\n';
  };
  const auto& sched = sc.env.schedule;
  switch (sched.mode) {
    case ans::DynamicsMode::stationary:
      report("stationary", 1);
      break;
    case ans::DynamicsMode::step_sequence:
      for (const auto& seg : sched.steps) report("segment start=" + std::to_string(seg.start_frame), seg.start_frame);
      break;
    case ans::DynamicsMode::markov_switch: {
      ans::EnvConfig a = sc.env, b = sc.env;
      a.schedule = ans::DynamicsSchedule::constant(sched.markov.state_a);
      b.schedule = ans::DynamicsSchedule::constant(sched.markov.state_b);
      for (auto [label, cfg] : {std::pair{"state A", a}, std::pair{"state B", b}}) {
        env = ans::Environment(cfg, prep.raw_contexts, sc.seed);
        report(label, 1);
      }
      break;
    }
  }
  return 0;
}

int cmd_features(const std::string& dnn_path, const std::string& device_spec) {
  const ans::DnnDescriptor desc = ans::load_descriptor(dnn_path);
  const ans::DeviceProfile device = parse_device(device_spec);
  const auto table = ans::context_table(desc);
  const auto df = ans::frontend_profile(desc, device);
  std::cout << "p,name";
  for (auto n : ans::kFeatureNames) std::cout << ',' << n;
  std::cout << ",d_f_ms\n";
  for (std::size_t p = 0; p < table.size(); ++p) {
    std::cout << p << ',' << partition_name(desc, static_cast<int>(p));
    for (int j = 0; j < ans::kContextDim; ++j) std::cout << ',' << ans::detail::fmt_double(table[p][j]);
    std::cout << ',' << ans::detail::fmt_double(df[p]) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online DNN partition learning: experiments and inspection"};
  app.require_subcommand(1);

  std::string scenario, policy, out_trace, out_summary, out_csv, dnn;
  std::string device = "10,400,100,2";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> params;
  int seeds = 20;
  unsigned threads = std::thread::hardware_concurrency();

  auto* run = app.add_subcommand("run", "Run one seeded replication of a scenario");
  run->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Seed (default: scenario seed)");
  run->add_option("--policy", policy, "Override policy: ans|linucb|oracle|mo|eo|layerwise");
  run->add_option("--out-trace", out_trace, "Per-frame trace CSV");
  run->add_option("--out-summary", out_summary, "Metrics summary JSON");

  auto* sw = app.add_subcommand("sweep", "Sweep parameters over seeds");
  sw->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sw->add_option("--param", params, "name=v1,v2,... (repeatable; Cartesian product)")->required();
  sw->add_option("--seeds", seeds, "Seeds per grid point")->check(CLI::PositiveNumber);
  sw->add_option("--seed", seed, "First seed (default: scenario seed)");
  sw->add_option("--threads", threads, "Worker threads");
  sw->add_option("--out", out_csv, "Output CSV (default: stdout)");

  auto* orc = app.add_subcommand("oracle", "Print the optimal partition of each environment segment");
  orc->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);

  auto* feat = app.add_subcommand("features", "Print the context table and front-end profile");
  feat->add_option("--dnn", dnn, "Descriptor JSON")->required()->check(CLI::ExistingFile);
  feat->add_option("--device", device, "Device ms/GMAC conv,fc,act and overhead ms")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(scenario, seed, policy, out_trace, out_summary);
    if (*sw) return cmd_sweep(scenario, params, seeds, seed, threads, out_csv);
    if (*orc) return cmd_oracle(scenario);
    if (*feat) return cmd_features(dnn, device);
  } catch (const ans::SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
