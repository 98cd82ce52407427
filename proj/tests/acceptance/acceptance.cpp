// Acceptance suite. `acceptance N` runs one criterion, `acceptance` runs all.
// Every criterion prints a single PASS/FAIL line; the exit status is nonzero
// when any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stablequad/cli.hpp"
#include "stablequad/error.hpp"
#include "stablequad/optimize.hpp"
#include "stablequad/quadtensor.hpp"
#include "stablequad/reduction.hpp"
#include "stablequad/rng.hpp"
#include "stablequad/stableparam.hpp"

using namespace stablequad;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

const fs::path& work_dir() {
  static const fs::path dir = fs::current_path() / "acceptance_out";
  return dir;
}

// Runs the stablequad command line in-process.
int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "stablequad");
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  return cli::run_cli(static_cast<int>(argv.size()), argv.data());
}

Tensor3 random_tensor(std::mt19937_64& gen, Eigen::Index n, double std = 1.0) {
  return Tensor3::from_mode1(normal_matrix(gen, n, n * n, std));
}

// Random orthogonal times singular values in [0.5, 2]: a Lyapunov weight
// Q = F F^T with condition number at most 16.
MatrixXd random_factor(std::mt19937_64& gen, Eigen::Index n) {
  const Eigen::HouseholderQR<MatrixXd> qr(normal_matrix(gen, n, n));
  std::uniform_real_distribution<double> sv(0.5, 2.0);
  VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = sv(gen);
  return MatrixXd(qr.householderQ()) * s.asDiagonal();
}

// ---- 1 -----------------------------------------------------------------------

Outcome criterion1() {
  Stopwatch clock;
  std::mt19937_64 gen(101);
  int total = 0, valid = 0;
  double worst_ep = 0.0;
  for (Eigen::Index n = 2; n <= 8; ++n) {
    for (int s = 0; s < 500; ++s) {
      const MatrixXd Qf = random_factor(gen, n);
      const MatrixXd Q = Qf * Qf.transpose();
      LasParams las{normal_matrix(gen, n, n), normal_matrix(gen, n, n), Qf, normal_matrix(gen, n, n * n)};
      GasParams gas{normal_matrix(gen, n, n), normal_matrix(gen, n, n), Qf, random_tensor(gen, n)};
      AtrParams atr{normal_matrix(gen, n, n), normal_matrix(gen, n, n), Qf,
                    random_tensor(gen, n),    normal_matrix(gen, n, 1), normal_matrix(gen, n, 1)};
      const QuadModel mg = assemble(gas);
      const QuadModel ma = assemble(atr);
      valid += certify(assemble(las), CertificateKind::local, Q).valid;
      valid += certify(mg, CertificateKind::global, Q).valid;
      valid += certify(ma, CertificateKind::trapping, Q, atr.m).valid;
      total += 3;
      worst_ep = std::max({worst_ep, gen_energy_preserving_residual(mg.H, Q), gen_energy_preserving_residual(ma.H, Q)});
    }
  }
  const double t = clock.seconds();
  return {valid == total && worst_ep < 1e-10 && t < 60.0,
          std::to_string(valid) + "/" + std::to_string(total) + " certified, energy residual " +
              fmt("%.2e", worst_ep) + ", " + fmt("%.1f", t) + " s"};
}

// ---- 2 -----------------------------------------------------------------------

MatrixXd random_skew_blocks(std::mt19937_64& gen, Eigen::Index n) {
  MatrixXd H(n, n * n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const MatrixXd S = normal_matrix(gen, n, n);
    H.middleCols(n * a, n) = S - S.transpose();
  }
  return H;
}

// Moves weight between columns n a + b and n b + a; the action is unchanged
// but the blocks stop being skew.
MatrixXd scramble_columns(std::mt19937_64& gen, const MatrixXd& H) {
  const Eigen::Index n = H.rows();
  MatrixXd out = H;
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const VectorXd c = normal_matrix(gen, n, 1);
      out.col(n * a + b) += c;
      out.col(n * b + a) -= c;
    }
  return out;
}

double action_gap(const MatrixXd& H1, const MatrixXd& H2, std::mt19937_64& gen) {
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    VectorXd x = normal_matrix(gen, H1.rows(), 1);
    x.normalize();
    const VectorXd k = kron_squared(x);
    worst = std::max(worst, (H1 * k - H2 * k).cwiseAbs().maxCoeff());
  }
  return worst;
}

Outcome criterion2() {
  Stopwatch clock;
  std::mt19937_64 gen(202);
  double skew = 0.0, gap = 0.0;
  for (Eigen::Index n = 2; n <= 4; ++n) {
    for (int s = 0; s < 100; ++s) {
      const MatrixXd H = scramble_columns(gen, random_skew_blocks(gen, n));
      const MatrixXd S = to_skew_form(H);
      skew = std::max(skew, block_skewness_residual(S));
      gap = std::max(gap, action_gap(H, S, gen));
    }
  }
  // Weighted pair: Q Ht has skew blocks although Ht itself does not.
  MatrixXd Ht(2, 4);
  Ht << 2, 5, 4, 10, -1, -2, -2, -4;
  MatrixXd Q(2, 2);
  Q << 1, 2, 2, 5;
  const MatrixXd S = to_skew_form_general(Ht, Q);
  const double general_gap = action_gap(Ht, S, gen);
  double general_skew = 0.0;
  const MatrixXd Qinv = Q.inverse();
  for (Eigen::Index b = 0; b < 2; ++b) {
    const MatrixXd G = S.middleCols(2 * b, 2) * Qinv;
    general_skew = std::max(general_skew, (G + G.transpose()).cwiseAbs().maxCoeff());
  }
  const double t = clock.seconds();
  const bool ok = skew < 1e-10 && gap < 1e-8 && general_skew < 1e-10 && general_gap < 1e-8 && t < 60.0;
  return {ok, "skewness " + fmt("%.2e", skew) + ", action gap " + fmt("%.2e", gap) + ", weighted pair " +
                  fmt("%.2e", general_skew) + "/" + fmt("%.2e", general_gap) + ", " + fmt("%.1f", t) + " s"};
}

// ---- 3 -----------------------------------------------------------------------

// Trajectories of a random globally stable model; pairs = trajectories * steps.
Dataset gas_data(std::uint64_t seed, int trajectories, int steps, double dt, QuadModel* truth_out = nullptr) {
  std::mt19937_64 gen(seed);
  const Eigen::Index n = 3;
  GasParams gp{normal_matrix(gen, n, n, 0.5), normal_matrix(gen, n, n, 0.5), MatrixXd::Identity(n, n),
               random_tensor(gen, n, 0.3)};
  const QuadModel truth = assemble(gp);
  Dataset ds;
  ds.dt = dt;
  ds.name = "gas";
  ds.truth = truth;
  for (int k = 0; k < trajectories; ++k) {
    const VectorXd x0 = normal_matrix(gen, n, 1, 1.5);
    ds.trajectories.push_back(simulate(truth, x0, steps, dt).X);
  }
  if (truth_out) *truth_out = truth;
  return ds;
}

Outcome criterion3() {
  const Dataset ds = gas_data(303, 2, 10, 0.05);
  const LossData ld = make_loss_data(ds, LossMode::rk4);
  double worst = 0.0;
  std::string detail;
  for (Method m : {Method::lasmi, Method::gasmi, Method::atrmi}) {
    FitConfig cfg;
    cfg.method = m;
    cfg.init_std = 0.3;
    cfg.seed = 7;
    const ParamSet p = init_params(m, 3, cfg);
    const double err = grad_check(make_loss_fn(p, ld, 1e-3), p.values, 1e-6, 20, 11);
    worst = std::max(worst, err);
    detail += std::string(to_string(m)) + " " + fmt("%.2e", err) + " ";
  }
  return {worst < 1e-5, detail + "(" + std::to_string(ld.X0.cols()) + " pairs)"};
}

// ---- 4 -----------------------------------------------------------------------

Outcome criterion4() {
  const QuadModel decay(-MatrixXd::Identity(1, 1), MatrixXd::Zero(1, 1), VectorXd::Zero(1));
  std::vector<double> errors;
  for (double dt : {0.1, 0.05, 0.025}) {
    const int steps = static_cast<int>(std::lround(1.0 / dt));
    const SimResult r = simulate(decay, VectorXd::Ones(1), steps, dt);
    errors.push_back(std::abs(r.X(steps, 0) - std::exp(-1.0)));
  }
  const double r1 = errors[0] / errors[1], r2 = errors[1] / errors[2];
  const auto near16 = [](double r) { return r > 16.0 * 0.8 && r < 16.0 * 1.2; };
  return {near16(r1) && near16(r2), "ratios " + fmt("%.3f", r1) + ", " + fmt("%.3f", r2)};
}

// ---- 5 -----------------------------------------------------------------------

Outcome criterion5() {
  const Dataset ds = gas_data(505, 4, 100, 0.01);
  int sampled = 0, valid = 0;
  for (Method m : {Method::lasmi, Method::gasmi}) {
    FitConfig cfg;
    cfg.method = m;
    cfg.steps = 2000;
    cfg.lr_cycle = 1000;
    cfg.seed = 5;
    const FitObserver obs = [&](int step, const ParamSet& p, double) {
      if (step % 200 != 199) return;
      const MatrixXd Q = p.Q_fac * p.Q_fac.transpose();
      ++sampled;
      valid += certify(assemble(to_stable_params(p)), certificate_for(m), Q).valid;
    };
    fit(ds, cfg, obs);
  }
  return {sampled == 20 && valid == sampled,
          std::to_string(valid) + "/" + std::to_string(sampled) + " sampled iterates certified"};
}

// ---- 6 -----------------------------------------------------------------------

Outcome criterion6() {
  Stopwatch clock;
  QuadModel truth;
  const Dataset train = gas_data(606, 4, 500, 0.01, &truth);
  FitConfig cfg;
  cfg.method = Method::gasmi;
  cfg.steps = 12000;
  cfg.seed = 6;
  const FitResult r = fit(train, cfg);
  std::mt19937_64 gen(6060);
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    const VectorXd x0 = normal_matrix(gen, 3, 1, 1.5);
    const SimResult a = simulate(truth, x0, 500, 0.01);
    const SimResult b = simulate(r.model, x0, 500, 0.01);
    worst = std::max(worst, b.diverged ? INFINITY : relative_l2(a.X, b.X));
  }
  const double t = clock.seconds();
  return {worst < 1e-2 && r.report.certificate.valid && t < 300.0,
          "held-out relative_l2 " + fmt("%.2e", worst) + ", final loss " + fmt("%.2e", r.report.final_loss) +
              ", " + fmt("%.1f", t) + " s"};
}

// ---- 7 and 8 share one sparse atrmi fit on the noisy scaled Lorenz data --------

struct LorenzRun {
  cli::ModelFile model;
  Dataset test;
  double fit_seconds = 0.0;
};

// Criterion 7 always refits; criterion 8 reuses that fit when it is on disk.
LorenzRun lorenz_run(bool refit) {
  const fs::path dir = work_dir() / "lorenz";
  const fs::path model_path = dir / "atrmi.json";
  const fs::path timing_path = dir / "atrmi.seconds";
  if (refit || !fs::exists(model_path) || !fs::exists(timing_path)) {
    if (cli({"generate", "--benchmark", "lorenz", "--out", dir.string()}) != 0)
      throw Error(ErrorCode::IoError, "lorenz generate failed");
    Stopwatch clock;
    const int code = cli({"fit", "--method", "atrmi", "--sparse", "--lambda-h", "1e-5", "--data", dir.string(),
                          "--out", model_path.string(), "--seed", "1", "--quiet"});
    const double seconds = clock.seconds();
    if (code != 0) throw Error(ErrorCode::IoError, "lorenz fit exited with " + std::to_string(code));
    std::ofstream(timing_path) << seconds << "\n";
  }
  LorenzRun run;
  run.model = cli::load_model(model_path);
  run.test = cli::load_dataset(dir / "test");
  std::ifstream(timing_path) >> run.fit_seconds;
  return run;
}

Outcome criterion7() {
  const LorenzRun run = lorenz_run(true);
  const int substeps = run.test.meta.count("substeps") ? static_cast<int>(run.test.meta.at("substeps")) : 1;
  const int steps = static_cast<int>(std::lround(20.0 / run.test.dt));
  bool bounded = true;
  std::string detail;
  for (const MatrixXd& Y : run.test.trajectories) {
    const SimResult sim = simulate(run.model.model, VectorXd(Y.row(0).transpose()), steps, run.test.dt, substeps);
    const double peak = sim.X.rowwise().norm().maxCoeff();
    bounded = bounded && !sim.diverged && sim.X.rows() == steps + 1 && peak < 1e4;
    detail += fmt("%.3g ", peak);
  }
  const bool fast = run.fit_seconds < 900.0;
  return {bounded && fast && run.test.trajectories.size() == 3,
          "peak norms " + detail + "over 20 time units, fit " + fmt("%.0f", run.fit_seconds) + " s, certificate " +
              (run.model.certificate && run.model.certificate->valid ? "valid" : "invalid")};
}

Outcome criterion8() {
  const LorenzRun run = lorenz_run(false);
  // x = 8 u, y = 8 v, z = 8 w + 25 with sigma = 10, rho = 28, beta = 8/3:
  //   u' = 10 (v - u)
  //   v' = 3 u - v - 8 u w
  //   w' = 8 u v - (8/3) w - 25/3
  struct Entry {
    const char* name;
    double truth;
    double learned;
  };
  const QuadModel& m = run.model.model;
  const MatrixXd Hs = symmetrize_H(m.H);
  const std::vector<Entry> entries = {
      {"A00", -10.0, m.A(0, 0)},     {"A01", 10.0, m.A(0, 1)},      {"A10", 3.0, m.A(1, 0)},
      {"A11", -1.0, m.A(1, 1)},      {"A22", -8.0 / 3.0, m.A(2, 2)}, {"H1[uw]", -4.0, Hs(1, 2)},
      {"H1[wu]", -4.0, Hs(1, 6)},    {"H2[uv]", 4.0, Hs(2, 1)},     {"H2[vu]", 4.0, Hs(2, 3)},
      {"B2", -25.0 / 3.0, m.B(2)}};
  int within = 0;
  std::string detail;
  for (const Entry& e : entries) {
    const double rel = std::abs(e.learned - e.truth) / std::abs(e.truth);
    within += rel <= 0.1;
    detail += std::string(e.name) + " " + fmt("%.3f", e.learned) + " (" + fmt("%.1f%%", 100.0 * rel) + ") ";
  }
  return {within == static_cast<int>(entries.size()),
          std::to_string(within) + "/" + std::to_string(entries.size()) + " support entries within 10%: " + detail};
}

// ---- 9 -----------------------------------------------------------------------

Outcome criterion9() {
  const double truth_ep = energy_preserving_residual(mhd_model(0.0, 0.0).H);
  const BenchmarkData data = generate_benchmark(default_config(BenchmarkName::mhd));
  FitConfig cfg;
  cfg.method = Method::atrmi;
  cfg.conserve_energy = true;
  cfg.seed = 9;
  // A dense fit to one trajectory is underdetermined and conserves energy
  // about its own m; sparse regression pins the translation to zero.
  const FitResult r = sparse_fit(data.train, cfg);
  const int substeps = data.test.meta.count("substeps") ? static_cast<int>(data.test.meta.at("substeps")) : 1;
  double worst = 0.0;
  for (const MatrixXd& Y : data.test.trajectories) {
    const SimResult sim =
        simulate(r.model, VectorXd(Y.row(0).transpose()), static_cast<int>(Y.rows() - 1), data.test.dt, substeps);
    if (sim.diverged) {
      worst = INFINITY;
      continue;
    }
    const double e0 = 0.5 * sim.X.row(0).squaredNorm();
    const double eT = 0.5 * sim.X.row(sim.X.rows() - 1).squaredNorm();
    worst = std::max(worst, std::abs(eT - e0) / e0);
  }
  const auto& a = std::get<AtrParams>(r.params);
  return {worst < 1e-3 && truth_ep < 1e-12 && !data.test.trajectories.empty(),
          "held-out energy drift " + fmt("%.2e", worst) + ", |m| " + fmt("%.2e", a.m.norm()) +
              ", truth energy residual " + fmt("%.2e", truth_ep)};
}

// ---- 10 and 11 run the command line end to end ------------------------------

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

struct SweepRow {
  double value = 0.0;
  std::string method;
  std::string error;
  bool valid = false;
  std::string status;
};

std::vector<SweepRow> read_sweep(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    const auto f = csv_fields(line);
    if (f.size() < 6) throw Error(ErrorCode::IoError, "short sweep row: " + line);
    rows.push_back({std::stod(f[1]), f[2], f[3], f[4] == "true", f[5]});
  }
  return rows;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + fmt("%.10g", x);
  return s;
}

std::vector<double> linspace(double a, double b, int count) {
  std::vector<double> v;
  for (int k = 0; k < count; ++k) v.push_back(a + (b - a) * k / (count - 1));
  return v;
}

// Desk-scale Burgers data: 64 grid points, 8 training ICs.
fs::path burgers_data(const std::string& benchmark, const std::vector<double>& ics) {
  const fs::path dir = work_dir() / benchmark;
  if (cli({"generate", "--benchmark", benchmark, "--grid", "64", "--ic", join(ics), "--out", dir.string()}) != 0)
    throw Error(ErrorCode::IoError, benchmark + " generate failed");
  return dir;
}

std::vector<std::string> desk_fit_flags() { return {"--order", "10", "--steps", "4000"}; }

std::vector<SweepRow> lambda_sweep(const fs::path& data, const std::string& methods, const fs::path& csv) {
  std::vector<std::string> args = {"sweep",   "--param", "lambda_h",   "--values", "1e-6,1e-4,1e-3,1e-2",
                                   "--methods", methods, "--data", data.string(), "--out",  csv.string()};
  for (const std::string& f : desk_fit_flags()) args.push_back(f);
  if (cli(args) != 0) throw Error(ErrorCode::IoError, "sweep exited nonzero");
  return read_sweep(csv);
}

Outcome criterion10() {
  const fs::path dir = burgers_data("burgers_dirichlet", linspace(3.0, 5.0, 8));
  Stopwatch clock;
  const std::vector<SweepRow> rows = lambda_sweep(dir, "gasmi", work_dir() / "burgers_dirichlet_lambda.csv");
  const double t = clock.seconds();
  // Baselines for the comparison plots; not part of the criterion.
  lambda_sweep(dir, "opinf,lasmi", work_dir() / "burgers_dirichlet_lambda_baselines.csv");
  bool all_valid = true, found = false;
  double err_at_1e3 = INFINITY;
  std::string detail;
  for (const SweepRow& row : rows) {
    detail += fmt("%.0e:", row.value) + (row.error.empty() ? row.status : row.error.substr(0, 8)) +
              (row.valid ? "" : "(invalid)") + " ";
    if (row.value != 1e-3) all_valid = all_valid && row.valid && row.status == "ok";
    if (row.value == 1e-3 && row.status == "ok" && row.error != "unstable") {
      found = true;
      err_at_1e3 = std::stod(row.error);
    }
  }
  return {all_valid && found && err_at_1e3 < 0.1 && t < 1200.0,
          "gasmi errors " + detail + "; sweep " + fmt("%.0f", t) + " s"};
}

Outcome criterion11() {
  const double truth_ep = energy_preserving_residual(burgers_neumann_model(64, 0.05).H);
  const fs::path dir = burgers_data("burgers_neumann", linspace(0.8, 4.0, 8));
  const fs::path csv = work_dir() / "burgers_neumann_lambda.csv";
  std::vector<std::string> args = {"sweep",   "--param", "lambda_h",  "--values", "1e-3", "--methods",
                                   "lasmi,gasmi", "--data", dir.string(), "--out",   csv.string()};
  for (const std::string& f : desk_fit_flags()) args.push_back(f);
  if (cli(args) != 0) return {false, "sweep exited nonzero"};
  std::map<std::string, double> err;
  for (const SweepRow& row : read_sweep(csv)) {
    if (row.status != "ok") continue;
    err[row.method] = row.error == "unstable" ? INFINITY : std::stod(row.error);
  }
  const bool have = err.count("lasmi") && err.count("gasmi");
  return {truth_ep > 1e-3 && have && err["gasmi"] > err["lasmi"],
          "truth energy residual " + fmt("%.2e", truth_ep) + ", test error lasmi " +
              fmt("%.3e", have ? err["lasmi"] : NAN) + " vs gasmi " + fmt("%.3e", have ? err["gasmi"] : NAN)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7, criterion8,
                                                          criterion9, criterion10, criterion11};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::cerr << "usage: acceptance [criterion 1-" << criteria.size() << "]...\n";
      return 2;
    }
    selected.push_back(k);
  }
  if (selected.empty())
    for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) selected.push_back(k);
  fs::create_directories(work_dir());
  int failed = 0;
  for (int k : selected) {
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(k - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << k << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
