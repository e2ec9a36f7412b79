// exsd: fit, simulate, diagnose and plot signatures of gated state-dependent
// Hawkes models of limit-order-book event streams.
//
// Exit codes: 0 success, 1 input or configuration error, 2 soft failure
// (non-converged fit, truncated simulation).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "exsd/exsd.hpp"

namespace fs = std::filesystem;
using namespace exsd;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kSoftFailure = 2;

void echo_config(const CLI::App& sub) {
  std::cout << "# resolved configuration\n[" << sub.get_name() << "]\n"
            << sub.config_to_str(true, false);
  std::cout.flush();
}

std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  p.replace_extension(suffix);
  return p.string();
}

std::string indexed(const char* stem, std::size_t i, std::size_t width) {
  std::string n = std::to_string(i);
  if (n.size() < width) n.insert(0, width - n.size(), '0');
  return std::string(stem) + "_" + n + ".csv";
}

// ------------------------------------------------------------------ fit

struct FitArgs {
  std::vector<std::string> streams;
  std::string variant = "exsd";
  std::string out_model;
  std::string report;
  std::string taxonomy;
  double horizon = 0.0;
  int max_iterations = 500;
  double tolerance = 1e-6;
  int restarts = 1;
  std::uint64_t seed = 0;
};

int cmd_fit(const FitArgs& a) {
  StreamReadOptions ro;
  if (!a.taxonomy.empty()) ro.taxonomy = read_taxonomy(a.taxonomy);
  if (a.horizon > 0.0) ro.horizon = a.horizon;
  std::vector<EventStream> streams;
  std::optional<Taxonomy> tax;
  for (const auto& p : a.streams) {
    auto f = read_stream_file(p, ro);
    if (tax && !(f.taxonomy == *tax)) throw Error(p + ": taxonomy differs from the first stream");
    tax = f.taxonomy;
    streams.push_back(std::move(f.stream));
  }
  FitOptions fo;
  fo.max_iterations = a.max_iterations;
  fo.gradient_tolerance = a.tolerance;
  fo.restarts = a.restarts;
  fo.seed = a.seed;
  const auto rep = fit(streams, *tax, parse_variant(a.variant), fo);
  write_model(rep.model, a.out_model);
  const std::string report = a.report.empty() ? sibling(a.out_model, ".report.json") : a.report;
  write_fit_report(rep, report);
  std::cout << "events: " << rep.num_events << "\n"
            << "log_lik_tp: " << format_double(rep.log_lik_tp) << "\n"
            << "log_lik_hawkes: " << format_double(rep.log_lik_hawkes) << "\n"
            << "iterations: " << rep.iterations << "\n"
            << "converged: " << (rep.converged ? "true" : "false") << "\n"
            << "model: " << a.out_model << "\nreport: " << report << "\n";
  if (!rep.converged) {
    std::cerr << "warning: optimizer did not converge (gradient norm "
              << format_double(rep.gradient_norm) << ")\n";
    return kSoftFailure;
  }
  return kOk;
}

// ------------------------------------------------------------------ simulate

struct SimulateArgs {
  std::string model;
  std::string impact;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  std::size_t seeds = 1;
  std::size_t jobs = 1;
  std::uint64_t max_events = 10'000'000;
  double burn_in = 0.0;
  std::string initial_state;
  double initial_price = 0.0;
  std::string out_dir;
  bool no_streams = false;
  bool no_midprice = false;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto model = read_model(a.model);
  const auto impact = a.impact.empty() ? default_impact(model.taxonomy)
                                       : read_impact(a.impact, model.taxonomy);
  SimOptions o;
  o.horizon = a.horizon;
  o.max_events = a.max_events;
  o.burn_in = a.burn_in;
  o.initial_price = a.initial_price;
  o.initial_state = a.initial_state.empty() ? 0 : model.taxonomy.state_index(a.initial_state);
  if (a.seeds == 0) throw Error("--seeds must be at least 1");

  fs::create_directories(a.out_dir);
  const std::size_t width = std::max<std::size_t>(5, std::to_string(a.seeds - 1).size());
  SimManifest man;
  man.model = a.model;
  man.impact = a.impact;
  man.master_seed = a.seed;
  man.horizon = a.horizon;
  man.max_events = a.max_events;
  man.runs.resize(a.seeds);

  run_ensemble(model, impact, o, a.seed, a.seeds, a.jobs, [&](std::size_t i, SimResult&& r) {
    ManifestEntry e;
    e.index = i;
    e.seed = derive_seed(a.seed, i);
    e.events = r.stream.records.size();
    e.truncated = r.truncated;
    e.horizon = r.stream.horizon;
    if (!a.no_streams) {
      e.stream = indexed("stream", i, width);
      write_stream(r.stream, model.taxonomy, (fs::path(a.out_dir) / e.stream).string());
    }
    if (!a.no_midprice) {
      e.midprice = indexed("midprice", i, width);
      write_midprice(r.path, r.stream.horizon, (fs::path(a.out_dir) / e.midprice).string());
    }
    man.runs[i] = std::move(e);  // distinct slots per index
  });
  const auto manifest = (fs::path(a.out_dir) / "manifest.json").string();
  write_manifest(man, manifest);
  const auto trunc = man.truncated_count();
  std::cout << "runs: " << a.seeds << "\ntruncated: " << trunc << "\nmanifest: " << manifest << "\n";
  if (trunc > 0) {
    std::cerr << "warning: " << trunc << " run(s) hit the event budget of " << a.max_events << "\n";
    return kSoftFailure;
  }
  return kOk;
}

// ------------------------------------------------------------------ diagnose

struct DiagnoseArgs {
  std::string stream;
  std::string model;
  std::string out_dir;
  std::size_t max_lag = 20;
  double horizon = 0.0;
};

int cmd_diagnose(const DiagnoseArgs& a) {
  const auto model = read_model(a.model);
  StreamReadOptions ro;
  ro.taxonomy = model.taxonomy;
  if (a.horizon > 0.0) ro.horizon = a.horizon;
  const auto stream = read_stream(a.stream, ro);
  if (stream.records.empty()) throw Error(a.stream + ": stream has no events");

  const auto ev = event_residuals(stream, model);
  const auto tot = total_residuals(stream, model);
  fs::create_directories(a.out_dir);
  auto out = [&](const char* name) { return (fs::path(a.out_dir) / name).string(); };
  write_text(out("residuals_event.csv"), residuals_csv(ev));
  write_text(out("residuals_total.csv"), residuals_csv(tot));
  write_text(out("qq_event.csv"), qq_csv(ev));
  write_text(out("qq_total.csv"), qq_csv(tot));
  write_text(out("acf_event.csv"), acf_csv(ev, a.max_lag));
  write_text(out("acf_total.csv"), acf_csv(tot, a.max_lag));
  write_text(out("ks_event.csv"), ks_csv(ev));
  write_text(out("ks_total.csv"), ks_csv(tot));
  write_text(out("cross_correlation_event.csv"), cross_correlation_csv(ev, a.max_lag));

  const auto counts = count_transitions(stream, model.taxonomy);
  write_text(out("transition_probabilities.csv"),
             transition_csv(counts, estimate_transition_kernel(counts), model.taxonomy));

  int code = kOk;
  try {
    write_text(out("stability.json"), stability_json(stability_report(model), model.taxonomy));
  } catch (const StabilityError& ex) {
    write_text(out("stability.json"), stability_json(ex.partial, model.taxonomy));
    std::cerr << "warning: " << ex.what() << "\n";
    code = kSoftFailure;
  }

  std::cout << "key,n,ks_p_value\n";
  for (const auto* set : {&ev, &tot})
    for (const auto& s : *set)
      std::cout << s.key << ',' << s.values.size() << ',' << format_double(ks_exp1(s).p_value) << '\n';
  std::cout << "outputs: " << a.out_dir << "\n";
  return code;
}

// ------------------------------------------------------------------ signature

struct SignatureArgs {
  std::vector<std::string> paths;
  std::string manifest;
  std::vector<double> deltas;
  double delta_min = 0.1;
  double delta_max = 600.0;
  std::size_t delta_points = 25;
  std::string out;
};

int cmd_signature(const SignatureArgs& a) {
  std::vector<MidPriceFile> files;
  for (const auto& p : a.paths) files.push_back(read_midprice(p));
  if (!a.manifest.empty()) {
    const auto man = read_manifest(a.manifest);
    const fs::path dir = fs::path(a.manifest).parent_path();
    std::size_t skipped = 0;
    for (const auto& r : man.runs) {
      if (r.truncated) {
        ++skipped;
        continue;
      }
      if (r.midprice.empty()) throw Error(a.manifest + ": run " + std::to_string(r.index) + " has no mid-price file");
      files.push_back(read_midprice((dir / r.midprice).string()));
    }
    if (skipped) std::cout << "skipped truncated runs: " << skipped << "\n";
  }
  if (files.empty()) throw Error("signature: no paths given");
  const double horizon = files.front().horizon;
  std::vector<MidPricePath> paths;
  for (auto& f : files) {
    if (f.horizon != horizon) throw Error("signature: paths have different horizons");
    paths.push_back(std::move(f.path));
  }
  const auto deltas = a.deltas.empty() ? log_delta_grid(a.delta_min, a.delta_max, a.delta_points) : a.deltas;
  if (deltas.back() > horizon) throw Error("signature: largest delta exceeds the horizon");
  const auto curve = signature_curve(paths, deltas, horizon);
  write_text(a.out, signature_csv(curve));

  bool non_increasing = true;
  for (std::size_t i = 1; i < curve.rv.size(); ++i) non_increasing = non_increasing && curve.rv[i] <= curve.rv[i - 1];
  const std::size_t last = curve.rv.size() - 1;
  const double diff = curve.rv.front() - curve.rv[last];
  const double se = std::hypot(curve.std_error.front(), curve.std_error[last]);
  std::cout << "paths: " << curve.n_paths << "\n"
            << "rv(" << format_double(deltas.front()) << ") - rv(" << format_double(deltas[last])
            << ") = " << format_double(diff);
  if (se > 0.0) std::cout << " (" << format_double(diff / se) << " standard errors)";
  std::cout << "\nslope: "
            << (se > 0.0 ? (diff > 2.0 * se ? "upward at high frequency" : diff < -2.0 * se ? "downward at high frequency" : "flat within 2 standard errors")
                         : (diff > 0.0 ? "upward at high frequency" : diff < 0.0 ? "downward at high frequency" : "flat"))
            << "\nmonotone non-increasing in delta: " << (non_increasing ? "yes" : "no") << "\n"
            << "output: " << a.out << "\n";
  return kOk;
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
  std::string scenario;
  std::string out_model;
  std::string out_impact;
};

int cmd_synth(const SynthArgs& a) {
  const auto sc = make_scenario(a.scenario);
  write_model(sc.model, a.out_model);
  const std::string impact = a.out_impact.empty() ? sibling(a.out_model, ".impact.json") : a.out_impact;
  write_impact(sc.impact, sc.model.taxonomy, impact);
  const auto rep = stability_report(sc.model);
  for (const auto& x : sc.model.taxonomy.states())
    std::cout << "rho(" << x.label << "): " << format_double(rep.spectral[x.index]) << " ("
              << to_string(rep.regime[x.index]) << ")\n";
  std::cout << "model: " << a.out_model << "\nimpact: " << impact << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gated state-dependent Hawkes models for limit-order-book event streams"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file mirroring the flags; flags win");

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Estimate a model from event streams");
  fit_cmd->add_option("-s,--stream", fa.streams, "Event stream CSV(s)")->required();
  fit_cmd->add_option("--variant", fa.variant, "poisson, const, sd or exsd")
      ->check(CLI::IsMember({"poisson", "const", "sd", "exsd"}))
      ->capture_default_str();
  fit_cmd->add_option("-o,--out-model", fa.out_model, "Model JSON to write")->required();
  fit_cmd->add_option("--report", fa.report, "Fit report JSON (default: <model>.report.json)");
  fit_cmd->add_option("--taxonomy", fa.taxonomy, "Taxonomy JSON overriding the stream header");
  fit_cmd->add_option("--horizon", fa.horizon, "Observation horizon overriding the stream header");
  fit_cmd->add_option("--max-iterations", fa.max_iterations)->capture_default_str();
  fit_cmd->add_option("--tolerance", fa.tolerance, "Gradient tolerance on the per-event log-likelihood")
      ->capture_default_str();
  fit_cmd->add_option("--restarts", fa.restarts, "Optimizer starts (jittered after the first)")->capture_default_str();
  fit_cmd->add_option("--seed", fa.seed, "Seed for restart jitter")->capture_default_str();

  SimulateArgs sa;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate an ensemble of event streams");
  sim_cmd->add_option("-m,--model", sa.model, "Model JSON")->required();
  sim_cmd->add_option("--impact", sa.impact, "Impact table JSON (default: +-0.5/+-1 tick for aggressive types)");
  sim_cmd->add_option("--horizon", sa.horizon, "Seconds per run")->required()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sa.seed, "Master seed")->capture_default_str();
  sim_cmd->add_option("--seeds", sa.seeds, "Number of runs")->capture_default_str();
  sim_cmd->add_option("--jobs", sa.jobs, "Worker threads")->capture_default_str();
  sim_cmd->add_option("--max-events", sa.max_events, "Event budget per run")->capture_default_str();
  sim_cmd->add_option("--burn-in", sa.burn_in, "Seconds discarded before recording")->capture_default_str();
  sim_cmd->add_option("--initial-state", sa.initial_state, "Initial spread-state label (default: first)");
  sim_cmd->add_option("--initial-price", sa.initial_price, "Initial mid-price in ticks")->capture_default_str();
  sim_cmd->add_option("-o,--out-dir", sa.out_dir, "Output directory")->required();
  sim_cmd->add_flag("--no-streams", sa.no_streams, "Do not write event-stream CSVs");
  sim_cmd->add_flag("--no-midprice", sa.no_midprice, "Do not write mid-price CSVs");

  DiagnoseArgs da;
  auto* diag_cmd = app.add_subcommand("diagnose", "Residual, stability and transition diagnostics");
  diag_cmd->add_option("-s,--stream", da.stream, "Event stream CSV")->required();
  diag_cmd->add_option("-m,--model", da.model, "Model JSON")->required();
  diag_cmd->add_option("-o,--out-dir", da.out_dir, "Output directory")->required();
  diag_cmd->add_option("--max-lag", da.max_lag, "Largest ACF/cross-correlation lag")->capture_default_str();
  diag_cmd->add_option("--horizon", da.horizon, "Observation horizon overriding the stream header");

  SignatureArgs ga;
  auto* sig_cmd = app.add_subcommand("signature", "Realized-variance signature plot");
  sig_cmd->add_option("-p,--paths", ga.paths, "Mid-price CSVs");
  sig_cmd->add_option("--manifest", ga.manifest, "Simulation manifest; non-truncated runs are used");
  sig_cmd->add_option("--deltas", ga.deltas, "Comma-separated sampling intervals (seconds)")->delimiter(',');
  sig_cmd->add_option("--delta-min", ga.delta_min)->capture_default_str();
  sig_cmd->add_option("--delta-max", ga.delta_max)->capture_default_str();
  sig_cmd->add_option("--delta-points", ga.delta_points)->capture_default_str();
  sig_cmd->add_option("-o,--out", ga.out, "Signature CSV")->required();

  SynthArgs ya;
  auto* syn_cmd = app.add_subcommand("synth", "Write a reference scenario model and impact table");
  syn_cmd->add_option("scenario", ya.scenario, "poisson, subcritical, dual-regime or sd-leaky")->required();
  syn_cmd->add_option("-o,--out-model", ya.out_model, "Model JSON")->required();
  syn_cmd->add_option("--out-impact", ya.out_impact, "Impact JSON (default: <model>.impact.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (*fit_cmd) return echo_config(*fit_cmd), cmd_fit(fa);
    if (*sim_cmd) return echo_config(*sim_cmd), cmd_simulate(sa);
    if (*diag_cmd) return echo_config(*diag_cmd), cmd_diagnose(da);
    if (*sig_cmd) return echo_config(*sig_cmd), cmd_signature(ga);
    if (*syn_cmd) return echo_config(*syn_cmd), cmd_synth(ya);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
