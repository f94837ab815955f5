#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "ink/dataset_io.hpp"
#include "ink/errors.hpp"
#include "ink/evaluation.hpp"
#include "ink/pipeline.hpp"
#include "ink/report.hpp"

namespace ink::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kEnvPrefix = "INKSKETCH_";

std::string env_name(const std::string& key) {
  std::string out = kEnvPrefix;
  for (const char c : key) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

template <typename T>
CLI::Option* option(CLI::App* app, const std::string& key, T& target, const std::string& help) {
  return app->add_option("--" + key, target, help)->envname(env_name(key))->capture_default_str();
}

void add_data_options(CLI::App* app, DataOptions& d) {
  option(app, "input", d.input, "Dataset file");
  option(app, "format", d.format, "Dataset format: csv or libsvm");
  app->add_flag("--header", d.header, "CSV input has a header row")->envname(env_name("header"));
  option(app, "label-column", d.label_column,
         "CSV label column (negative counts from the end), or 'none'");
}

void add_kernel_options(CLI::App* app, KernelOptions& k) {
  option(app, "kernel", k.kernel, "Kernel: gaussian, linear or polynomial");
  option(app, "bandwidth", k.bandwidth, "Gaussian bandwidth");
  option(app, "degree", k.degree, "Polynomial degree");
  option(app, "offset", k.offset, "Polynomial offset");
}

void add_run_options(CLI::App* app, RunConfig& c) {
  option(app, "algorithm", c.algorithm, "batch-exact, ink-oracle or ink-estimate");
  add_data_options(app, c.data);
  add_kernel_options(app, c.kernel);
  option(app, "gamma", c.gamma, "Nystrom regularization γ");
  option(app, "mu", c.mu, "Ridge regularization μ");
  option(app, "epsilon", c.epsilon, "Accuracy ε in (0, 1)");
  option(app, "delta", c.delta, "Failure probability δ in (0, 1)");
  app->add_option("--budget,--m", c.budget, "Space budget q̄ (sequential) or sample count m (batch)")
      ->envname(env_name("budget"));
  option(app, "seed", c.seed, "Random seed");
  option(app, "checkpoint-every", c.checkpoint_every, "Checkpoint period in steps (0: final only)");
  app->add_flag("--verify", c.verify, "Run the exact second pass and write conditions.json")
      ->envname(env_name("verify"));
  option(app, "output", c.output, "Output directory");
  option(app, "noise-std", c.noise_std, "Label noise σ used in the risk columns");
  option(app, "cap-safety", c.cap_safety, "Abort once Q_t exceeds 8·q̄·cap-safety");
}

std::optional<int> parse_label_column(const std::string& text) {
  if (text == "none") return std::nullopt;
  int v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw InputError("--label-column must be an integer or 'none', got '" + text + "'");
  return v;
}

std::optional<FixedDesignProblem> problem_from_labels(const Dataset& data, const RunConfig& c) {
  if (!data.has_labels()) return std::nullopt;
  return FixedDesignProblem{data, data.label_vector(data.size()), c.noise_std, c.mu};
}

struct Evaluation {
  std::vector<MetricsRow> rows;
  std::vector<ConditionReport> conditions;
  bool all_hold() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const auto& r) { return r.holds(); });
  }
};

Evaluation evaluate_checkpoints(const Dataset& data, const KernelSpec& spec, const RunConfig& c,
                                const std::vector<RunCheckpoint>& checkpoints) {
  if (data.size() > kDeskScaleCap) {
    std::ostringstream msg;
    msg << "verification refused: " << data.size() << " points exceeds the desk-scale cap of "
        << kDeskScaleCap;
    throw InputError(msg.str());
  }
  CheckpointEvaluator evaluator(gram(data, spec, data.size()), c.gamma, c.epsilon,
                                problem_from_labels(data, c));
  Evaluation ev;
  for (const auto& cp : checkpoints) {
    if (cp.t < 1 || cp.t > data.size())
      throw InputError("checkpoint t=" + std::to_string(cp.t) + " does not fit the dataset");
    ConditionReport report;
    ev.rows.push_back(evaluator.evaluate(cp, &report));
    ev.conditions.push_back(report);
  }
  return ev;
}

std::vector<MetricsRow> unevaluated_rows(const std::vector<RunCheckpoint>& checkpoints) {
  std::vector<MetricsRow> rows;
  for (const auto& cp : checkpoints) {
    MetricsRow r;
    r.evaluated = false;
    r.t = cp.t;
    r.q = cp.q;
    r.deff_tilde = cp.deff_tilde;
    rows.push_back(r);
  }
  return rows;
}

void write_metrics(const fs::path& dir, const std::vector<MetricsRow>& rows) {
  std::ostringstream csv;
  write_metrics_csv(rows, csv);
  write_text_file(dir / "metrics.csv", csv.str());
  write_json_file(dir / "metrics.json", {{"spec_version", kSpecVersion}, {"metrics", metrics_json(rows)}});
}

void print_conditions(const std::vector<ConditionReport>& reports, std::ostream& out) {
  for (const auto& r : reports) {
    out << "t=" << r.step << " lower=" << (r.lower_psd_ok ? "ok" : "FAIL")
        << " upper=" << (r.upper_psd_ok ? "ok" : "FAIL")
        << " spectral_gap=" << format_real(r.spectral_gap);
    if (r.psi_gap) out << " psi_gap=" << format_real(*r.psi_gap);
    out << '\n';
  }
}

std::uint64_t default_sequential_budget(const Matrix& K, const RunConfig& c, std::size_t n) {
  return sequential_budget(exact_rls(K, c.gamma).deff, c.epsilon, c.delta, n);
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const InvariantViolation& e) {
    err << "invariant violation: " << e.what() << '\n';
    return kInvariantViolation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

struct SuggestOptions {
  double deff = 0.0;
  double epsilon = 0.5;
  double delta = 0.1;
  std::size_t n = 0;
  double rho = 0.0;
  std::string oracle = "estimate";
};

int execute_suggest(const SuggestOptions& s, std::ostream& out) {
  double alpha = 1.0;
  double beta = 1.0;
  if (s.oracle == "estimate") {
    if (!(s.epsilon > 0.0 && s.epsilon < 1.0)) throw InputError("epsilon must lie in (0, 1)");
    if (s.rho < 0.0) throw InputError("rho must be nonnegative");
    alpha = rls_alpha(s.epsilon);
    beta = alpha * alpha * (1.0 + s.rho);
  } else if (s.oracle != "exact") {
    throw InputError("--oracle must be 'exact' or 'estimate'");
  }
  out << "alpha=" << format_real(alpha) << '\n'
      << "beta=" << format_real(beta) << '\n'
      << "q_bar=" << sequential_budget(s.deff, s.epsilon, s.delta, s.n, alpha, beta) << '\n'
      << "m=" << batch_budget(s.deff, s.epsilon, s.delta, s.n) << '\n';
  return kOk;
}

struct GenerateOptions {
  SyntheticSpec spec;
  std::string target = "sine";
  std::uint64_t seed = 0;
  std::string output;
};

int execute_generate(GenerateOptions g, std::ostream& out) {
  g.spec.target = parse_target(g.target);
  const FixedDesignProblem problem = generate_synthetic(g.spec, RngHandle(g.seed));
  std::ostringstream csv;
  write_csv(problem.dataset, csv);
  if (g.output.empty() || g.output == "-") {
    out << csv.str();
  } else {
    write_text_file(g.output, csv.str());
  }
  return kOk;
}

struct VerifyOptions {
  std::string run_dir;
  std::string input;
  std::string output;
};

int execute_verify(const VerifyOptions& v, std::ostream& out, std::ostream& err) {
  const fs::path dir(v.run_dir);
  const nlohmann::ordered_json doc = read_json_file(dir / "checkpoints.json");
  RunConfig config = config_from_echo(doc.at("config_echo"));
  if (!v.input.empty()) config.data.input = v.input;
  const Dataset data = load_dataset(config.data);
  const KernelSpec spec = make_kernel(config.kernel);
  const Evaluation ev = evaluate_checkpoints(data, spec, config, checkpoints_from_json(doc));

  const fs::path out_dir = v.output.empty() ? dir : fs::path(v.output);
  fs::create_directories(out_dir);
  write_json_file(out_dir / "conditions.json", conditions_json(doc.at("config_echo"), ev.conditions));
  write_metrics(out_dir, ev.rows);
  print_conditions(ev.conditions, out);
  if (!ev.all_hold()) {
    err << "verification failed: at least one checkpoint violates the reconstruction condition\n";
    return kConditionFailed;
  }
  return kOk;
}

struct SweepOptions {
  RunConfig base;
  std::uint64_t seed_start = 0;
  std::size_t count = 10;
  std::size_t jobs = 1;
};

int execute_sweep(const SweepOptions& s, std::ostream& out, std::ostream& err) {
  if (s.count < 1) throw InputError("--count must be at least 1");
  if (s.jobs < 1) throw InputError("--jobs must be at least 1");
  validate(s.base);
  fs::create_directories(s.base.output);

  std::vector<int> codes(s.count, kOk);
  std::vector<std::string> logs(s.count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < s.count; k = next++) {
      RunConfig c = s.base;
      c.seed = s.seed_start + k;
      c.output = (fs::path(s.base.output) / ("seed-" + std::to_string(c.seed))).string();
      std::ostringstream o;
      std::ostringstream e;
      codes[k] = execute_run(c, o, e);
      logs[k] = o.str() + e.str();
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < std::min(s.jobs, s.count); ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream summary;
  summary << "seed,exit_code,final_Q_t,final_deff_tilde\n";
  for (std::size_t k = 0; k < s.count; ++k) {
    const std::uint64_t seed = s.seed_start + k;
    out << logs[k];
    summary << seed << ',' << codes[k] << ',';
    const fs::path cp_file = fs::path(s.base.output) / ("seed-" + std::to_string(seed)) / "checkpoints.json";
    if (codes[k] == kOk && fs::exists(cp_file)) {
      const auto cps = checkpoints_from_json(read_json_file(cp_file));
      summary << cps.back().q << ',' << format_real(cps.back().deff_tilde);
    } else {
      summary << ',';
    }
    summary << '\n';
  }
  write_text_file(fs::path(s.base.output) / "summary.csv", summary.str());
  const int worst = *std::max_element(codes.begin(), codes.end());
  if (worst != kOk) err << "sweep: at least one run failed (worst exit code " << worst << ")\n";
  return worst;
}

}  // namespace

void validate(const RunConfig& c) {
  if (c.algorithm != "batch-exact" && c.algorithm != "ink-oracle" && c.algorithm != "ink-estimate")
    throw InputError("unknown algorithm '" + c.algorithm +
                     "' (expected batch-exact, ink-oracle or ink-estimate)");
  if (!(c.gamma > 0.0)) throw InputError("gamma must be positive");
  if (!(c.mu > 0.0)) throw InputError("mu must be positive");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw InputError("epsilon must lie in (0, 1)");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw InputError("delta must lie in (0, 1)");
  if (c.budget && *c.budget < 1) throw InputError("budget must be at least 1");
  if (c.noise_std < 0.0) throw InputError("noise-std must be nonnegative");
  if (!(c.cap_safety > 0.0)) throw InputError("cap-safety must be positive");
  if (c.data.input.empty()) throw InputError("--input is required");
  if (c.data.format != "csv" && c.data.format != "libsvm")
    throw InputError("unknown format '" + c.data.format + "' (expected csv or libsvm)");
  make_kernel(c.kernel);
  parse_label_column(c.data.label_column);
}

Dataset load_dataset(const DataOptions& d) {
  if (d.format == "libsvm") return load_libsvm(d.input);
  if (d.format != "csv") throw InputError("unknown format '" + d.format + "'");
  CsvOptions options;
  options.has_header = d.header;
  options.label_column = parse_label_column(d.label_column);
  return load_csv(d.input, options);
}

KernelSpec make_kernel(const KernelOptions& k) {
  if (k.kernel == "gaussian") return KernelSpec::gaussian(k.bandwidth);
  if (k.kernel == "linear") return KernelSpec::linear();
  if (k.kernel == "polynomial") return KernelSpec::polynomial(k.degree, k.offset);
  throw InputError("unknown kernel '" + k.kernel + "' (expected gaussian, linear or polynomial)");
}

nlohmann::ordered_json config_echo(const RunConfig& c) {
  nlohmann::ordered_json kernel = {{"name", c.kernel.kernel}};
  if (c.kernel.kernel == "gaussian") kernel["bandwidth"] = c.kernel.bandwidth;
  if (c.kernel.kernel == "polynomial") {
    kernel["degree"] = c.kernel.degree;
    kernel["offset"] = c.kernel.offset;
  }
  nlohmann::ordered_json echo = {
      {"algorithm", c.algorithm},
      {"input", {{"path", c.data.input}, {"format", c.data.format}, {"header", c.data.header},
                 {"label_column", c.data.label_column}}},
      {"kernel", kernel},
      {"gamma", c.gamma},
      {"mu", c.mu},
      {"epsilon", c.epsilon},
      {"delta", c.delta},
      {"seed", c.seed},
      {"checkpoint_every", c.checkpoint_every},
      {"noise_std", c.noise_std},
      {"cap_safety", c.cap_safety},
  };
  echo["budget"] = c.budget ? nlohmann::ordered_json(*c.budget) : nlohmann::ordered_json(nullptr);
  return echo;
}

RunConfig config_from_echo(const nlohmann::ordered_json& e) {
  RunConfig c;
  try {
    c.algorithm = e.at("algorithm").get<std::string>();
    const auto& in = e.at("input");
    c.data.input = in.at("path").get<std::string>();
    c.data.format = in.at("format").get<std::string>();
    c.data.header = in.at("header").get<bool>();
    c.data.label_column = in.at("label_column").get<std::string>();
    const auto& k = e.at("kernel");
    c.kernel.kernel = k.at("name").get<std::string>();
    if (k.contains("bandwidth")) c.kernel.bandwidth = k.at("bandwidth").get<double>();
    if (k.contains("degree")) c.kernel.degree = k.at("degree").get<int>();
    if (k.contains("offset")) c.kernel.offset = k.at("offset").get<double>();
    c.gamma = e.at("gamma").get<double>();
    c.mu = e.at("mu").get<double>();
    c.epsilon = e.at("epsilon").get<double>();
    c.delta = e.at("delta").get<double>();
    c.seed = e.at("seed").get<std::uint64_t>();
    c.checkpoint_every = e.at("checkpoint_every").get<std::size_t>();
    c.noise_std = e.at("noise_std").get<double>();
    c.cap_safety = e.at("cap_safety").get<double>();
    if (!e.at("budget").is_null()) c.budget = e.at("budget").get<std::uint64_t>();
  } catch (const nlohmann::ordered_json::exception& ex) {
    throw InputError(std::string("malformed config_echo: ") + ex.what());
  }
  return c;
}

int execute_run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    validate(c);
    const Dataset data = load_dataset(c.data);
    const KernelSpec spec = make_kernel(c.kernel);
    const std::size_t n = data.size();
    if (n < 1) throw InputError("dataset is empty");
    const RngHandle rng(c.seed);
    const bool desk = n <= kDeskScaleCap;
    if (c.verify && !desk) {
      std::ostringstream msg;
      msg << "--verify refused: " << n << " points exceeds the desk-scale cap of " << kDeskScaleCap;
      throw InputError(msg.str());
    }

    std::vector<RunCheckpoint> checkpoints;
    std::ostringstream summary;
    RunOptions options;
    options.checkpoint_every = c.checkpoint_every;
    options.cap_safety_factor = c.cap_safety;

    if (c.algorithm == "batch-exact") {
      if (!desk) throw InputError("batch-exact needs the full Gram matrix; dataset exceeds the desk-scale cap");
      const Matrix K = gram(data, spec, n);
      const LeverageProfile profile = exact_rls(K, c.gamma);
      const std::size_t m = c.budget ? static_cast<std::size_t>(*c.budget)
                                     : batch_budget(profile.deff, c.epsilon, c.delta, n);
      BatchResult res = batch_exact(K, profile, c.gamma, m, rng);
      checkpoints.push_back(res.checkpoint);
      summary << "batch-exact: n=" << n << " m=" << m << " distinct=" << std::set<std::size_t>(res.draws.begin(), res.draws.end()).size()
              << " deff=" << format_real(profile.deff) << '\n';
    } else {
      std::uint64_t q_bar = 0;
      RunResult res;
      if (c.algorithm == "ink-oracle") {
        if (!desk) throw InputError("ink-oracle uses the exact oracle; dataset exceeds the desk-scale cap");
        ExactOracle oracle(data, spec, c.gamma);
        q_bar = c.budget ? *c.budget : default_sequential_budget(oracle.full_gram(), c, n);
        res = ink_oracle_run(data, spec, c.gamma, q_bar, oracle, options, rng);
      } else {
        if (!c.budget) throw InputError("ink-estimate needs --budget (see suggest-budget)");
        q_bar = *c.budget;
        res = ink_estimate_run(data, spec, c.gamma, q_bar, c.epsilon, options, rng);
      }
      checkpoints = std::move(res.checkpoints);
      summary << c.algorithm << ": n=" << n << " q_bar=" << q_bar
              << " final_Q_t=" << checkpoints.back().q << " max_Q_t=" << res.max_q
              << " deff_tilde=" << format_real(checkpoints.back().deff_tilde) << '\n';
    }

    const fs::path dir(c.output);
    fs::create_directories(dir);
    const nlohmann::ordered_json echo = config_echo(c);
    write_json_file(dir / "checkpoints.json", checkpoints_json(echo, checkpoints));
    write_json_file(dir / "timing.json", timing_json(checkpoints));
    out << summary.str();
    if (c.verify) {
      const Evaluation ev = evaluate_checkpoints(data, spec, c, checkpoints);
      write_metrics(dir, ev.rows);
      write_json_file(dir / "conditions.json", conditions_json(echo, ev.conditions));
      print_conditions(ev.conditions, out);
    } else {
      write_metrics(dir, unevaluated_rows(checkpoints));
    }
    return static_cast<int>(kOk);
  });
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Streaming Nystrom sketching with ridge leverage score sampling", "inksketch");
  app.require_subcommand(1);
  // Subcommand settings live in [run] / [sweep] sections; flags win over the file.
  app.set_config("--config", "", "TOML/INI configuration file")->envname(env_name("config"));
  app.fallthrough();

  RunConfig run_config;
  CLI::App* run = app.add_subcommand("run", "Run one sketching algorithm over a dataset");
  add_run_options(run, run_config);

  VerifyOptions verify_options;
  CLI::App* verify = app.add_subcommand("verify", "Check the reconstruction condition at every checkpoint");
  verify->add_option("--run-dir", verify_options.run_dir, "Directory holding checkpoints.json")->required();
  verify->add_option("--input", verify_options.input, "Dataset override (default: path in the run's config)");
  verify->add_option("--output", verify_options.output, "Report directory (default: the run directory)");

  SuggestOptions suggest_options;
  CLI::App* suggest = app.add_subcommand("suggest-budget", "Print the space budget q̄ and batch size m");
  suggest->add_option("--deff", suggest_options.deff, "Anticipated effective dimension")->required();
  suggest->add_option("--epsilon", suggest_options.epsilon, "Accuracy ε")->capture_default_str();
  suggest->add_option("--delta", suggest_options.delta, "Failure probability δ")->capture_default_str();
  suggest->add_option("--n", suggest_options.n, "Stream length")->required();
  suggest->add_option("--rho", suggest_options.rho, "λ_max/γ used for β")->capture_default_str();
  suggest->add_option("--oracle", suggest_options.oracle, "exact (α=β=1) or estimate")->capture_default_str();

  GenerateOptions gen;
  CLI::App* generate = app.add_subcommand("generate", "Write a clustered synthetic dataset as CSV");
  generate->add_option("--n", gen.spec.n, "Number of points")->capture_default_str();
  generate->add_option("--d", gen.spec.d, "Dimension")->capture_default_str();
  generate->add_option("--clusters", gen.spec.n_clusters, "Number of clusters")->capture_default_str();
  generate->add_option("--cluster-std", gen.spec.cluster_std, "Within-cluster std")->capture_default_str();
  generate->add_option("--spread", gen.spec.center_spread, "Cluster centre range")->capture_default_str();
  generate->add_option("--target", gen.target, "sine, quadratic or bump")->capture_default_str();
  generate->add_option("--sigma", gen.spec.sigma, "Label noise std")->capture_default_str();
  generate->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  generate->add_option("--output", gen.output, "Output CSV path ('-' for stdout)");

  SweepOptions sweep_options;
  CLI::App* sweep = app.add_subcommand("sweep", "Repeat a run over consecutive seeds");
  add_run_options(sweep, sweep_options.base);
  sweep->add_option("--seed-start", sweep_options.seed_start, "First seed")->capture_default_str();
  sweep->add_option("--count", sweep_options.count, "Number of seeds")->capture_default_str();
  sweep->add_option("--jobs", sweep_options.jobs, "Concurrent runs")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  if (run->parsed()) return execute_run(run_config, out, err);
  if (sweep->parsed()) return guarded(err, [&] { return execute_sweep(sweep_options, out, err); });
  if (verify->parsed()) return guarded(err, [&] { return execute_verify(verify_options, out, err); });
  if (suggest->parsed()) return guarded(err, [&] { return execute_suggest(suggest_options, out); });
  if (generate->parsed()) return guarded(err, [&] { return execute_generate(gen, out); });
  return kConfigError;
}

}  // namespace ink::cli
