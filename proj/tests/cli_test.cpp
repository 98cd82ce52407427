#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "stablequad/cli.hpp"
#include "stablequad/error.hpp"
#include "stablequad/rng.hpp"

using namespace stablequad;
using namespace stablequad::cli;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("stablequad_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(STABLEQUAD_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small Dirichlet Burgers set, fast enough for a unit test.
fs::path burgers_data(const std::string& name) {
  const fs::path dir = scratch(name);
  const int rc = run("generate --benchmark burgers_dirichlet --grid 24 --time-points 101 --ic 3,3.5,4,4.5,5 "
                     "--test-ic 4.5 --out " + (dir / "data").string());
  EXPECT_EQ(rc, 0);
  return dir;
}

}  // namespace

TEST(Io, TrajectoryCsvRoundTripIsExact) {
  const fs::path dir = scratch("csv");
  std::mt19937_64 gen(51);
  const MatrixXd X = normal_matrix(gen, 7, 3) * 1e3;
  write_trajectory_csv(dir / "a.csv", X, 0.5, 0.1);
  VectorXd t;
  const MatrixXd Y = read_trajectory_csv(dir / "a.csv", &t);
  EXPECT_EQ(X, Y);
  EXPECT_NEAR(t(6), 1.1, 1e-12);
  EXPECT_EQ(slurp(dir / "a.csv").substr(0, 12), "t,x1,x2,x3\n0");
}

TEST(Io, NonUniformTimeRejected) {
  const fs::path dir = scratch("nonuniform");
  std::ofstream(dir / "b.csv") << "t,x1\n0,1\n0.1,2\n0.3,3\n";
  try {
    read_trajectory_csv(dir / "b.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}

TEST(Io, ModelFileRoundTripIsBitExact) {
  std::mt19937_64 gen(52);
  const Eigen::Index n = 3;
  AtrParams p{normal_matrix(gen, n, n), normal_matrix(gen, n, n), MatrixXd::Identity(n, n),
              Tensor3::from_mode1(normal_matrix(gen, n, n * n)), normal_matrix(gen, n, 1),
              normal_matrix(gen, n, 1)};
  ModelFile mf;
  mf.method = "atrmi";
  mf.model = assemble(p);
  mf.params = p;
  mf.m = p.m;
  mf.Q = MatrixXd::Identity(n, n);
  mf.certificate = certify(mf.model, CertificateKind::trapping, mf.Q, mf.m);
  mf.basis = pod_basis(normal_matrix(gen, 10, 6), 3);
  const fs::path dir = scratch("model");
  save_model(dir / "m.json", mf);
  const ModelFile back = load_model(dir / "m.json");
  EXPECT_EQ(back.model.A, mf.model.A);
  EXPECT_EQ(back.model.H, mf.model.H);
  EXPECT_EQ(back.model.B, mf.model.B);
  EXPECT_EQ(*back.m, *mf.m);
  EXPECT_EQ(back.basis->V, mf.basis->V);
  const AtrParams& q = std::get<AtrParams>(*back.params);
  EXPECT_EQ(q.J_raw, p.J_raw);
  EXPECT_EQ(q.B_tilde, p.B_tilde);
  EXPECT_EQ(back.certificate->valid, mf.certificate->valid);
  EXPECT_EQ(back.certificate->residuals, mf.certificate->residuals);
  // Saving again gives the same bytes.
  save_model(dir / "m2.json", back);
  EXPECT_EQ(slurp(dir / "m.json"), slurp(dir / "m2.json"));
}

TEST(Io, FitConfigRoundTrip) {
  FitConfig cfg;
  cfg.method = Method::atrmi;
  cfg.lambda_H = 1e-3;
  cfg.conserve_energy = true;
  cfg.fixed_Q = MatrixXd::Identity(2, 2) * 2.0;
  const FitConfig back = fit_config_from_json(fit_config_to_json(cfg));
  EXPECT_EQ(fit_config_to_json(back).dump(), fit_config_to_json(cfg).dump());
}

TEST(Cli, GenerateMhdHasSixColumnsAndIsDeterministic) {
  const fs::path dir = scratch("mhd");
  ASSERT_EQ(run("generate --benchmark mhd --time-points 201 --horizon 2 --seed 4 --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run("generate --benchmark mhd --time-points 201 --horizon 2 --seed 4 --out " + (dir / "b").string()), 0);
  const std::string csv = slurp(dir / "a" / "train" / "traj_000.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x1,x2,x3,x4,x5,x6");
  for (const char* f : {"train/traj_000.csv", "train/traj_000.json", "test/traj_000.csv", "truth.json", "config.json"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST(Cli, GenerateLorenzTruthAtInitialCondition) {
  const fs::path dir = scratch("lorenz");
  ASSERT_EQ(run("generate --benchmark lorenz --noise-std 0 --time-points 101 --horizon 0.1 --extra test_horizon=0.1 "
                "--out " + dir.string()),
            0);
  const ModelFile truth = load_model(dir / "truth.json");
  const MatrixXd X = read_trajectory_csv(dir / "train" / "traj_000.csv");
  const VectorXd xs = X.row(0).transpose();
  Eigen::Vector3d raw(-8.0, 7.0, 27.0);
  EXPECT_LT((8.0 * xs - (raw - Eigen::Vector3d(0, 0, 25))).norm(), 1e-13);
  // Raw-coordinate right-hand side is 8 times the scaled one.
  const VectorXd f = 8.0 * truth.model.rhs(xs);
  EXPECT_NEAR(f(0), 150.0, 1e-10);
  EXPECT_NEAR(f(1), -15.0, 1e-10);
  EXPECT_NEAR(f(2), -128.0, 1e-10);
}

TEST(Cli, ConfigAndIoErrors) {
  const fs::path dir = scratch("errors");
  EXPECT_EQ(run("generate --benchmark nosuch --out " + dir.string()), 2);
  EXPECT_EQ(run("generate --benchmark mhd --time-points 1 --out " + dir.string()), 2);
  EXPECT_EQ(run("generate --benchmark mhd --out /proc/stablequad_cannot_write"), 3);
  EXPECT_EQ(run("frobnicate"), 2);
  fs::create_directories(dir / "empty");
  EXPECT_EQ(run("fit --method gasmi --data " + (dir / "empty").string() + " --out " + (dir / "m.json").string()), 2);
  EXPECT_EQ(run("certify --model " + (dir / "missing.json").string()), 3);
}

TEST(Cli, CertifyHandWrittenModels) {
  const fs::path dir = scratch("certify");
  write_json(dir / "unstable.json", json{{"method", "opinf"}, {"A", {{1, 0}, {0, 1}}}, {"H", {{0, 0, 0, 0}, {0, 0, 0, 0}}},
                                         {"B", {0, 0}}});
  EXPECT_EQ(run("certify --model " + (dir / "unstable.json").string()), 1);

  // Generalized energy-preserving pair with its weight.
  write_json(dir / "weighted.json", json{{"method", "gasmi"},
                                       {"A", {{-4, -4}, {1, 0}}},
                                       {"H", {{2, 5, 4, 10}, {-1, -2, -2, -4}}},
                                       {"B", {0, 0}}});
  write_json(dir / "q.json", json{{"Q", {{1, 2}, {2, 5}}}});
  EXPECT_EQ(run("certify --kind global --model " + (dir / "weighted.json").string()), 1);
  EXPECT_EQ(run("certify --kind global --model " + (dir / "weighted.json").string() + " --q " +
                (dir / "q.json").string() + " --out " + (dir / "cert.json").string()),
            0);
  const json cert = read_json(dir / "cert.json");
  EXPECT_EQ(cert["kind"], "global");
  EXPECT_TRUE(cert["valid"].get<bool>());
}

TEST(Cli, FitCertifyEvaluatePipeline) {
  const fs::path dir = burgers_data("pipeline");
  const std::string data = (dir / "data").string();
  const std::string model = (dir / "model.json").string();
  ASSERT_EQ(run("fit --quiet --method gasmi --order 6 --lambda-h 1e-3 --steps 300 --lr-cycle 100 --data " + data +
                " --out " + model),
            0);
  const ModelFile mf = load_model(model);
  ASSERT_TRUE(mf.certificate.has_value());
  EXPECT_EQ(mf.certificate->kind, CertificateKind::global);
  EXPECT_TRUE(mf.certificate->valid);
  ASSERT_TRUE(mf.basis.has_value());
  EXPECT_EQ(mf.basis->rank(), 6);
  const json rep = read_json(dir / "model.report.json");
  EXPECT_EQ(rep["loss_history"].size(), 300u);
  EXPECT_EQ(rep["status"], "ok");

  EXPECT_EQ(run("certify --model " + model), 0);
  ASSERT_EQ(run("evaluate --model " + model + " --data " + data + " --out " + (dir / "eval.json").string()), 0);
  const json ev = read_json(dir / "eval.json");
  EXPECT_EQ(ev["trajectories"].size(), 1u);
  EXPECT_TRUE(ev["mean_relative_l2"].is_number());

  // Same arguments, same model.
  ASSERT_EQ(run("fit --quiet --method gasmi --order 6 --lambda-h 1e-3 --steps 300 --lr-cycle 100 --data " + data +
                " --out " + (dir / "again.json").string()),
            0);
  EXPECT_EQ(slurp(model), slurp(dir / "again.json"));
}

TEST(Cli, EvaluateTruthOnOwnData) {
  const fs::path dir = scratch("truth_eval");
  ASSERT_EQ(run("generate --benchmark mhd --time-points 401 --horizon 4 --out " + dir.string()), 0);
  ASSERT_EQ(run("evaluate --model " + (dir / "truth.json").string() + " --data " + dir.string() + " --out " +
                (dir / "eval.json").string()),
            0);
  const json ev = read_json(dir / "eval.json");
  EXPECT_LT(ev["mean_relative_l2"].get<double>(), 1e-6);
}

TEST(Cli, EvaluateFlagsDivergenceAndShapeMismatch) {
  const fs::path dir = scratch("diverge");
  ASSERT_EQ(run("generate --benchmark mhd --time-points 401 --horizon 4 --out " + dir.string()), 0);
  MatrixXd H = MatrixXd::Zero(6, 36);
  for (int i = 0; i < 6; ++i) H(i, 7 * i) = 5.0;  // x_i' = 5 x_i^2
  ModelFile bad;
  bad.method = "opinf";
  bad.model = QuadModel(MatrixXd::Zero(6, 6), H, VectorXd::Constant(6, 1.0));
  save_model(dir / "bad.json", bad);
  ASSERT_EQ(run("evaluate --model " + (dir / "bad.json").string() + " --data " + dir.string() + " --out " +
                (dir / "eval.json").string()),
            0);
  const json ev = read_json(dir / "eval.json");
  EXPECT_EQ(ev["mean_relative_l2"], "unstable");
  EXPECT_TRUE(ev["trajectories"][0]["diverged"].get<bool>());

  ModelFile small;
  small.method = "opinf";
  small.model = QuadModel::zeros(3);
  save_model(dir / "small.json", small);
  EXPECT_EQ(run("evaluate --model " + (dir / "small.json").string() + " --data " + dir.string() + " --out " +
                (dir / "e2.json").string()),
            2);
}

TEST(Cli, NonFiniteLossExitsFourWithReport) {
  const fs::path dir = scratch("nonfinite");
  MatrixXd X(5, 2);
  X << 1e200, -1e200, 2e200, 1e200, -1e200, 3e200, 1e200, 1e200, 2e200, -2e200;
  write_trajectory_csv(dir / "traj_000.csv", X, 0.0, 0.1);
  EXPECT_EQ(run("fit --quiet --method gasmi --steps 5 --data " + dir.string() + " --out " + (dir / "m.json").string()),
            4);
  const json rep = read_json(dir / "m.report.json");
  EXPECT_EQ(rep["status"], "nonfinite_loss");
  EXPECT_EQ(rep["nonfinite_step"], 0);
}

TEST(Cli, SweepRowsAndErrors) {
  const fs::path dir = burgers_data("sweep");
  const std::string data = (dir / "data").string();
  ASSERT_EQ(run("sweep --param order --values 2,4 --methods opinf,gasmi --steps 50 --lr-cycle 50 --data " + data +
                " --out " + (dir / "order.csv").string()),
            0);
  std::ifstream in(dir / "order.csv");
  std::string line;
  int rows = 0;
  std::getline(in, line);
  EXPECT_EQ(line, "param,value,method,mean_test_error,certificate_valid,status");
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_NE(line.find(",ok"), std::string::npos) << line;
    if (line.find("gasmi") != std::string::npos) EXPECT_NE(line.find(",true,"), std::string::npos) << line;
  }
  EXPECT_EQ(rows, 4);
  EXPECT_EQ(run("sweep --param order --values \"\" --data " + data + " --out " + (dir / "x.csv").string()), 2);
  EXPECT_EQ(run("sweep --param steps --values 1 --data " + data + " --out " + (dir / "x.csv").string()), 2);
}
