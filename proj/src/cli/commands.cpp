#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "stablequad/cli.hpp"
#include "stablequad/error.hpp"

namespace stablequad::cli {

namespace {

std::string hex(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::IoError, "cannot create directory " + dir.string());
}

// Parent directory of an output file must exist and be writable.
void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) ensure_dir(file.parent_path());
}

fs::path sibling(const fs::path& file, const std::string& suffix) {
  fs::path out = file;
  out.replace_extension();
  out += suffix;
  return out;
}

MatrixXd load_q(const fs::path& path) {
  const json j = read_json(path);
  return matrix_from_json(j.is_object() ? j.at("Q") : j);
}

// ---- reduction ------------------------------------------------------------

struct ReduceOptions {
  int order = 0;
  double energy_fraction = 0.0;
  int channels = 1;
};

bool wants_reduction(const ReduceOptions& o) { return o.order > 0 || o.energy_fraction > 0.0; }

PodBasis build_basis(const Dataset& ds, const ReduceOptions& o) {
  const MatrixXd Y = ds.snapshot_matrix();
  const Eigen::Index N = Y.rows();
  if (o.channels < 1 || N % o.channels != 0) {
    throw Error(ErrorCode::ConfigError, "channels must divide the state dimension");
  }
  if (o.order > 0 && o.order % o.channels != 0) throw Error(ErrorCode::ConfigError, "channels must divide order");
  const Eigen::Index rows = N / o.channels;
  std::vector<PodBasis> parts;
  for (int c = 0; c < o.channels; ++c) {
    const MatrixXd block = Y.middleRows(rows * c, rows);
    parts.push_back(o.order > 0 ? pod_basis(block, o.order / o.channels) : pod_basis_energy(block, o.energy_fraction));
  }
  return blockdiag_basis(parts);
}

Dataset project_dataset(const Dataset& ds, const PodBasis& b) {
  Dataset out = ds;
  out.truth.reset();
  for (MatrixXd& X : out.trajectories) X = project(X.transpose(), b).transpose();
  for (MatrixXd& D : out.derivatives) D = project(D.transpose(), b).transpose();
  return out;
}

// ---- model files and evaluation -------------------------------------------

ModelFile model_file_from(const FitResult& r, const FitConfig& cfg, const std::optional<PodBasis>& basis,
                          const json& extra_config) {
  ModelFile mf;
  mf.method = to_string(cfg.method);
  mf.model = r.model;
  mf.params = r.params;
  mf.certificate = r.report.certificate;
  mf.Q = r.report.certificate.lyapunov_Q;
  if (const auto* a = std::get_if<AtrParams>(&r.params)) mf.m = a->m;
  mf.basis = basis;
  json hashed = {{"fit", fit_config_to_json(cfg)}, {"extra", extra_config}};
  mf.provenance = {{"config_hash", hex(fnv1a(hashed.dump()))}, {"seed", cfg.seed}, {"tool_version", kToolVersion}};
  return mf;
}

json report_json(const FitResult& r, const FitConfig& cfg, const std::optional<PodBasis>& basis, bool sparse,
                 const std::string& status) {
  json j;
  j["status"] = status;
  j["method"] = to_string(cfg.method);
  j["config"] = fit_config_to_json(cfg);
  j["sparse"] = sparse;
  j["loss_history"] = r.report.loss_history;
  j["round_lengths"] = r.report.round_lengths;
  j["final_loss"] = std::isfinite(r.report.final_loss) ? json(r.report.final_loss) : json("nan");
  j["certificate"] = certificate_to_json(r.report.certificate);
  j["wall_time"] = r.report.wall_time;
  j["nonfinite_step"] = r.report.nonfinite_step;
  json masks = json::object();
  for (std::size_t i = 0; i < r.report.mask_names.size() && i < r.report.pruned_masks.size(); ++i)
    masks[r.report.mask_names[i]] = matrix_to_json(r.report.pruned_masks[i]);
  j["masks"] = masks;
  j["nonzeros"] = count_nonzeros(r.model);
  if (basis) {
    j["order"] = basis->rank();
    j["energy_captured"] = basis->energy_captured;
  }
  return j;
}

struct TrajectoryScore {
  bool diverged = false;
  double error = 0.0;
};

struct EvalSummary {
  std::vector<TrajectoryScore> scores;
  int diverged = 0;
  double mean = 0.0;  // over all trajectories; meaningless when diverged > 0
};

EvalSummary evaluate_model(const ModelFile& mf, const Dataset& test, int substeps) {
  EvalSummary s;
  double total = 0.0;
  for (const MatrixXd& Y : test.trajectories) {
    const Eigen::Index N = Y.cols();
    if (mf.basis ? mf.basis->V.rows() != N : mf.model.dim() != N) {
      throw Error(ErrorCode::ShapeMismatch, "model and data dimensions do not match (data has " +
                                                std::to_string(N) + " columns)");
    }
    VectorXd x0 = Y.row(0).transpose();
    if (mf.basis) x0 = project(x0, *mf.basis);
    const SimResult sim = simulate(mf.model, x0, static_cast<int>(Y.rows() - 1), test.dt, substeps);
    TrajectoryScore ts;
    if (sim.diverged) {
      ts.diverged = true;
      ++s.diverged;
    } else {
      const MatrixXd Yhat = mf.basis ? MatrixXd(unproject(sim.X.transpose(), *mf.basis).transpose()) : sim.X;
      ts.error = relative_l2(Y, Yhat);
      total += ts.error;
    }
    s.scores.push_back(ts);
  }
  s.mean = test.trajectories.empty() ? 0.0 : total / static_cast<double>(test.trajectories.size());
  return s;
}

json eval_json(const EvalSummary& s) {
  json j;
  json per = json::array();
  for (std::size_t k = 0; k < s.scores.size(); ++k) {
    per.push_back({{"index", k},
                   {"relative_l2", s.scores[k].diverged ? json("unstable") : json(s.scores[k].error)},
                   {"diverged", s.scores[k].diverged}});
  }
  j["trajectories"] = per;
  j["num_diverged"] = s.diverged;
  j["mean_relative_l2"] = s.diverged > 0 ? json("unstable") : json(s.mean);
  return j;
}

int default_substeps(const Dataset& ds) {
  const auto it = ds.meta.find("substeps");
  return it != ds.meta.end() && it->second >= 1 ? static_cast<int>(it->second) : 1;
}

fs::path split_dir(const fs::path& dir, const char* split) {
  return fs::is_directory(dir / split) ? dir / split : dir;
}

// ---- fit options shared by fit and sweep ----------------------------------

struct FitOptions {
  std::string method = "gasmi";
  std::string loss_mode = "rk4";
  int steps = 12000;
  double lr_min = 1e-6;
  double lr_max = 1e-2;
  int lr_cycle = 4000;
  double lambda_H = 0.0;
  double init_std = 0.1;
  std::uint64_t seed = 0;
  double threshold = 0.1;
  int threshold_rounds = 4;
  bool sparse = false;
  bool conserve_energy = false;
  bool opinf_constant = false;
  std::string q_path;
  ReduceOptions reduce;
};

void add_fit_flags(CLI::App* app, FitOptions& o, bool with_method) {
  if (with_method) app->add_option("--method", o.method, "opinf | lasmi | gasmi | atrmi")->required();
  app->add_option("--loss-mode", o.loss_mode, "rk4 | derivative");
  app->add_option("--steps", o.steps, "Adam steps per round");
  app->add_option("--lr-min", o.lr_min);
  app->add_option("--lr-max", o.lr_max);
  app->add_option("--lr-cycle", o.lr_cycle);
  app->add_option("--lambda-h", o.lambda_H, "weight of the mean |H| penalty");
  app->add_option("--init-std", o.init_std);
  app->add_option("--seed", o.seed);
  app->add_option("--threshold", o.threshold, "sparse fits: pruning tolerance");
  app->add_option("--threshold-rounds", o.threshold_rounds);
  app->add_flag("--sparse", o.sparse, "sequential thresholding");
  app->add_flag("--conserve-energy", o.conserve_energy, "atrmi: no dissipation and no forcing");
  app->add_flag("--opinf-constant", o.opinf_constant, "opinf: also learn B");
  app->add_option("--q", o.q_path, "JSON file with a fixed Lyapunov weight Q");
  app->add_option("--order", o.reduce.order, "POD order");
  app->add_option("--energy-fraction", o.reduce.energy_fraction, "POD order from captured energy");
  app->add_option("--channels", o.reduce.channels, "reduce this many equal state blocks separately");
}

FitConfig to_fit_config(const FitOptions& o) {
  FitConfig cfg;
  cfg.method = method_from_string(o.method);
  cfg.loss_mode = loss_mode_from_string(o.loss_mode);
  cfg.steps = o.steps;
  cfg.lr_min = o.lr_min;
  cfg.lr_max = o.lr_max;
  cfg.lr_cycle = o.lr_cycle;
  cfg.lambda_H = o.lambda_H;
  cfg.init_std = o.init_std;
  cfg.seed = o.seed;
  cfg.threshold = o.threshold;
  cfg.threshold_rounds = o.threshold_rounds;
  cfg.conserve_energy = o.conserve_energy;
  cfg.opinf_constant = o.opinf_constant;
  if (!o.q_path.empty()) cfg.fixed_Q = load_q(o.q_path);
  cfg.validate();
  return cfg;
}

json reduce_json(const ReduceOptions& r) {
  return {{"order", r.order}, {"energy_fraction", r.energy_fraction}, {"channels", r.channels}};
}

struct FitOutcome {
  FitResult result;
  std::optional<PodBasis> basis;
  bool nonfinite = false;
  std::string message;
};

FitOutcome run_fit(const Dataset& train, const FitConfig& cfg, const FitOptions& o, const FitObserver& obs) {
  FitOutcome out;
  Dataset data = train;
  if (wants_reduction(o.reduce)) {
    out.basis = build_basis(train, o.reduce);
    data = project_dataset(train, *out.basis);
  }
  try {
    out.result = o.sparse ? sparse_fit(data, cfg, obs) : fit(data, cfg, obs);
  } catch (const FitError& e) {
    out.result = e.partial();
    out.nonfinite = true;
    out.message = e.what();
  }
  return out;
}

// ---- commands -------------------------------------------------------------

struct GenerateOptions {
  std::string benchmark;
  std::string out;
  std::uint64_t seed = 0;
  std::optional<double> noise_std;
  std::optional<int> grid;
  std::optional<double> horizon;
  std::optional<int> time_points;
  std::vector<double> ic;
  std::vector<double> test_ic;
  std::vector<std::string> extras;
};

int cmd_generate(const GenerateOptions& o) {
  BenchmarkConfig cfg = default_config(benchmark_from_string(o.benchmark));
  cfg.seed = o.seed;
  if (o.noise_std) cfg.noise_std = *o.noise_std;
  if (o.grid) cfg.grid_points = *o.grid;
  if (o.horizon) cfg.horizon = *o.horizon;
  if (o.time_points) cfg.time_points = *o.time_points;
  if (!o.ic.empty()) cfg.ic_params = o.ic;
  if (!o.test_ic.empty()) cfg.test_ic_params = o.test_ic;
  for (const std::string& kv : o.extras) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "--extra expects key=value, got '" + kv + "'");
    try {
      cfg.extras[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "--extra value is not a number: '" + kv + "'");
    }
  }
  cfg.validate();
  const fs::path out(o.out);
  ensure_dir(out);
  const BenchmarkData data = generate_benchmark(cfg);
  save_dataset(out / "train", data.train, "train", cfg.seed);
  save_dataset(out / "test", data.test, "test", cfg.seed);
  if (data.train.truth) {
    ModelFile mf;
    mf.method = "truth";
    mf.model = *data.train.truth;
    mf.provenance = {{"config_hash", hex(fnv1a(benchmark_config_to_json(cfg).dump()))},
                     {"seed", cfg.seed},
                     {"tool_version", kToolVersion}};
    save_model(out / "truth.json", mf);
  }
  write_json(out / "config.json", benchmark_config_to_json(cfg));
  std::cout << "wrote " << data.train.trajectories.size() << " train and " << data.test.trajectories.size()
            << " test trajectories to " << out.string() << "\n";
  return kExitOk;
}

struct FitCommand {
  FitOptions fit;
  std::string data;
  std::string out;
  std::string report;
  bool quiet = false;
};

int cmd_fit(const FitCommand& c) {
  const FitConfig cfg = to_fit_config(c.fit);
  const Dataset train = load_dataset(c.data);
  const fs::path out(c.out);
  const fs::path report = c.report.empty() ? sibling(out, ".report.json") : fs::path(c.report);
  ensure_parent(out);
  ensure_parent(report);
  FitObserver obs;
  if (!c.quiet) {
    obs = [](int step, const ParamSet&, double loss) {
      if (step % 1000 == 0) std::fprintf(stderr, "step %d loss %.6e\n", step, loss);
    };
  }
  const FitOutcome r = run_fit(train, cfg, c.fit, obs);
  const ModelFile mf = model_file_from(r.result, cfg, r.basis, reduce_json(c.fit.reduce));
  save_model(out, mf);
  json rep = report_json(r.result, cfg, r.basis, c.fit.sparse, r.nonfinite ? "nonfinite_loss" : "ok");
  if (r.nonfinite) rep["error"] = r.message;
  write_json(report, rep);
  if (r.nonfinite) {
    std::cerr << "error: " << r.message << " (partial model written)\n";
    return kExitNumerical;
  }
  const auto& cert = r.result.report.certificate;
  std::cout << "method " << mf.method << "  final loss " << r.result.report.final_loss << "  certificate "
            << to_string(cert.kind) << (cert.valid ? " valid" : " INVALID") << "  nonzeros "
            << count_nonzeros(mf.model) << "\n";
  return kExitOk;
}

struct CertifyCommand {
  std::string model;
  std::string kind;
  std::string q_path;
  std::string out;
};

int cmd_certify(const CertifyCommand& c) {
  const ModelFile mf = load_model(c.model);
  CertificateKind kind = CertificateKind::local;
  if (!c.kind.empty()) {
    kind = certificate_kind_from_string(c.kind);
  } else if (mf.certificate) {
    kind = mf.certificate->kind;
  } else if (mf.method != "truth") {
    kind = certificate_for(method_from_string(mf.method));
  }
  std::optional<MatrixXd> Q = mf.Q;
  if (!c.q_path.empty()) Q = load_q(c.q_path);
  if (Q && (Q->rows() != mf.model.dim() || Q->cols() != mf.model.dim())) {
    throw Error(ErrorCode::ShapeMismatch, "Q does not match the model dimension");
  }
  const StabilityCertificate cert = certify(mf.model, kind, Q, mf.m);
  const fs::path out = c.out.empty() ? sibling(c.model, ".certificate.json") : fs::path(c.out);
  ensure_parent(out);
  write_json(out, certificate_to_json(cert));
  std::cout << "kind " << to_string(cert.kind) << ": " << (cert.valid ? "valid" : "INVALID") << "\n";
  for (const auto& [k, v] : cert.residuals) std::cout << "  " << k << " = " << v << "\n";
  if (cert.radius) {
    if (cert.radius->unbounded) {
      std::cout << "  radius = unbounded\n";
    } else {
      std::cout << "  radius = " << cert.radius->value << "\n";
    }
  }
  return cert.valid ? kExitOk : kExitInvalid;
}

struct EvaluateCommand {
  std::string model;
  std::string data;
  std::string out;
  int substeps = 0;
};

int cmd_evaluate(const EvaluateCommand& c) {
  const ModelFile mf = load_model(c.model);
  const Dataset test = load_dataset(split_dir(c.data, "test"));
  const int substeps = c.substeps > 0 ? c.substeps : default_substeps(test);
  const EvalSummary s = evaluate_model(mf, test, substeps);
  json rep = eval_json(s);
  rep["model"] = c.model;
  rep["data"] = c.data;
  rep["substeps"] = substeps;
  ensure_parent(c.out);
  write_json(c.out, rep);
  std::cout << "mean relative L2 " << (s.diverged > 0 ? std::string("unstable") : std::to_string(s.mean)) << " over "
            << s.scores.size() << " trajectories (" << s.diverged << " diverged)\n";
  return kExitOk;
}

struct SweepCommand {
  FitOptions fit;
  std::string param;
  std::vector<std::string> values;
  std::vector<std::string> methods{"opinf", "lasmi", "gasmi"};
  std::string data;
  std::string out;
};

struct SweepCell {
  double value = 0.0;
  std::string method;
  std::string status = "ok";
  double error = 0.0;
  bool unstable = false;
  bool valid = false;
};

int worker_count(std::size_t cells) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("STABLEQUAD_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  return static_cast<int>(std::min<std::size_t>(n, std::max<std::size_t>(1, cells)));
}

int cmd_sweep(const SweepCommand& c) {
  if (c.methods.empty()) throw Error(ErrorCode::ConfigError, "sweep needs at least one method");
  if (c.param != "lambda_h" && c.param != "order") {
    throw Error(ErrorCode::ConfigError, "--param must be lambda_h or order");
  }
  for (const std::string& m : c.methods) method_from_string(m);
  const Dataset train = load_dataset(split_dir(c.data, "train"));
  const Dataset test = load_dataset(split_dir(c.data, "test"));
  const int substeps = default_substeps(test);

  std::vector<double> values;
  for (const std::string& v : c.values) {
    if (v.empty()) continue;
    try {
      std::size_t used = 0;
      values.push_back(std::stod(v, &used));
      if (used != v.size()) throw std::invalid_argument(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "sweep value is not a number: '" + v + "'");
    }
  }
  if (values.empty()) throw Error(ErrorCode::ConfigError, "sweep needs at least one value");
  std::vector<SweepCell> cells;
  for (double v : values)
    for (const std::string& m : c.methods) cells.push_back({v, m});

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      SweepCell& cell = cells[i];
      try {
        FitOptions o = c.fit;
        o.method = cell.method;
        if (c.param == "lambda_h") {
          o.lambda_H = cell.value;
        } else {
          if (cell.value < 1 || cell.value != std::floor(cell.value)) {
            throw Error(ErrorCode::ConfigError, "order values must be positive integers");
          }
          o.reduce.order = static_cast<int>(cell.value);
          o.reduce.energy_fraction = 0.0;
        }
        const FitConfig cfg = to_fit_config(o);
        const FitOutcome r = run_fit(train, cfg, o, nullptr);
        if (r.nonfinite) {
          cell.status = "nonfinite_loss";
          continue;
        }
        cell.valid = r.result.report.certificate.valid;
        const ModelFile mf = model_file_from(r.result, cfg, r.basis, reduce_json(o.reduce));
        const EvalSummary s = evaluate_model(mf, test, substeps);
        cell.unstable = s.diverged > 0;
        cell.error = s.mean;
      } catch (const std::exception& e) {
        cell.status = std::string("error: ") + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = worker_count(cells.size());
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();

  ensure_parent(c.out);
  std::FILE* f = std::fopen(c.out.c_str(), "w");
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + c.out);
  std::fprintf(f, "param,value,method,mean_test_error,certificate_valid,status\n");
  for (const SweepCell& cell : cells) {
    std::string status = cell.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    std::fprintf(f, "%s,%.17g,%s,", c.param.c_str(), cell.value, cell.method.c_str());
    if (cell.status != "ok") {
      std::fprintf(f, ",");
    } else if (cell.unstable) {
      std::fprintf(f, "unstable,");
    } else {
      std::fprintf(f, "%.17g,", cell.error);
    }
    std::fprintf(f, "%s,%s\n", cell.valid ? "true" : "false", status.c_str());
  }
  if (std::fclose(f) != 0) throw Error(ErrorCode::IoError, "write failed: " + c.out);
  int failed = 0;
  for (const SweepCell& cell : cells) failed += cell.status != "ok";
  std::cout << "sweep: " << cells.size() << " cells, " << failed << " failed, " << workers << " workers\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Stable quadratic model inference"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  GenerateOptions gen;
  CLI::App* g = app.add_subcommand("generate", "Simulate a benchmark and write train/test CSVs");
  g->add_option("--benchmark", gen.benchmark, "lorenz | mhd | burgers_dirichlet | burgers_neumann | chafee")
      ->required();
  g->add_option("--out", gen.out, "output directory")->required();
  g->add_option("--seed", gen.seed);
  g->add_option("--noise-std", gen.noise_std);
  g->add_option("--grid", gen.grid);
  g->add_option("--horizon", gen.horizon);
  g->add_option("--time-points", gen.time_points);
  g->add_option("--ic", gen.ic, "initial-condition parameters")->delimiter(',');
  g->add_option("--test-ic", gen.test_ic, "held-out initial-condition parameters")->delimiter(',');
  g->add_option("--extra", gen.extras, "key=value overrides (mu, alpha, nu, test_horizon)");

  FitCommand fc;
  CLI::App* f = app.add_subcommand("fit", "Fit a model to a dataset directory");
  add_fit_flags(f, fc.fit, true);
  f->add_option("--data", fc.data, "dataset directory")->required();
  f->add_option("--out", fc.out, "model JSON")->required();
  f->add_option("--report", fc.report, "fit report JSON (default: <out>.report.json)");
  f->add_flag("--quiet", fc.quiet);

  CertifyCommand cc;
  CLI::App* c = app.add_subcommand("certify", "Check the stability certificate of a model");
  c->add_option("--model", cc.model)->required();
  c->add_option("--kind", cc.kind, "local | global | trapping | energy_conserving");
  c->add_option("--q", cc.q_path, "JSON file with the Lyapunov weight Q");
  c->add_option("--out", cc.out, "certificate JSON (default: <model>.certificate.json)");

  EvaluateCommand ec;
  CLI::App* e = app.add_subcommand("evaluate", "Simulate test trajectories and score them");
  e->add_option("--model", ec.model)->required();
  e->add_option("--data", ec.data, "test directory")->required();
  e->add_option("--out", ec.out, "report JSON")->required();
  e->add_option("--substeps", ec.substeps, "RK4 substeps per snapshot (default: as generated)");

  SweepCommand sc;
  CLI::App* s = app.add_subcommand("sweep", "Fit and evaluate over a parameter grid");
  add_fit_flags(s, sc.fit, false);
  s->add_option("--param", sc.param, "lambda_h | order")->required();
  s->add_option("--values", sc.values)->delimiter(',')->required();
  s->add_option("--methods", sc.methods)->delimiter(',');
  s->add_option("--data", sc.data, "directory with train/ and test/")->required();
  s->add_option("--out", sc.out, "CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (g->parsed()) return cmd_generate(gen);
    if (f->parsed()) return cmd_fit(fc);
    if (c->parsed()) return cmd_certify(cc);
    if (e->parsed()) return cmd_evaluate(ec);
    if (s->parsed()) return cmd_sweep(sc);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code_for(err.code());
  } catch (const fs::filesystem_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitIo;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace stablequad::cli
