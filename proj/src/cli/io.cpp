#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "stablequad/cli.hpp"
#include "stablequad/error.hpp"

namespace stablequad::cli {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError: return kExitIo;
    case ErrorCode::NonFinite:
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::SolveFailed:
    case ErrorCode::NotStrictlyStable: return kExitNumerical;
    default: return kExitConfig;
  }
}

namespace {

// JSON has no inf/nan; they travel as strings.
json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double number_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw Error(ErrorCode::ConfigError, "expected a number, got " + j.dump());
}

template <typename F>
auto parse_field(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

json matrix_to_json(const MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(number(M(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::ConfigError, "matrix must be an array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return MatrixXd(0, 0);
  if (!j[0].is_array()) throw Error(ErrorCode::ConfigError, "matrix must be an array of rows");
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::ShapeMismatch, "matrix rows have different lengths");
    }
    for (Eigen::Index c = 0; c < cols; ++c) M(i, c) = number_from(row[static_cast<std::size_t>(c)]);
  }
  return M;
}

json vector_to_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::ConfigError, "vector must be an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_from(j[i]);
  return v;
}

json certificate_to_json(const StabilityCertificate& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["valid"] = c.valid;
  json ev = json::array();
  for (const EigenEvidence& e : c.eig_evidence)
    ev.push_back({{"re", number(e.value.real())}, {"im", number(e.value.imag())}, {"role", e.role}});
  j["eig_evidence"] = ev;
  j["lyapunov_Q"] = matrix_to_json(c.lyapunov_Q);
  if (c.radius) {
    j["radius"] = {{"value", number(c.radius->value)}, {"unbounded", c.radius->unbounded}};
  } else {
    j["radius"] = nullptr;
  }
  json res = json::object();
  for (const auto& [k, v] : c.residuals) res[k] = number(v);
  j["residuals"] = res;
  return j;
}

StabilityCertificate certificate_from_json(const json& j) {
  return parse_field("certificate", [&] {
    StabilityCertificate c;
    c.kind = certificate_kind_from_string(j.at("kind").get<std::string>());
    c.valid = j.at("valid").get<bool>();
    for (const json& e : j.at("eig_evidence"))
      c.eig_evidence.push_back({{number_from(e.at("re")), number_from(e.at("im"))}, e.at("role").get<std::string>()});
    c.lyapunov_Q = matrix_from_json(j.at("lyapunov_Q"));
    if (j.contains("radius") && !j["radius"].is_null()) {
      c.radius = Radius{number_from(j["radius"].at("value")), j["radius"].at("unbounded").get<bool>()};
    }
    for (const auto& [k, v] : j.at("residuals").items()) c.residuals[k] = number_from(v);
    return c;
  });
}

json fit_config_to_json(const FitConfig& cfg) {
  json j;
  j["method"] = to_string(cfg.method);
  j["loss_mode"] = to_string(cfg.loss_mode);
  j["steps"] = cfg.steps;
  j["lr_min"] = cfg.lr_min;
  j["lr_max"] = cfg.lr_max;
  j["lr_cycle"] = cfg.lr_cycle;
  j["lambda_H"] = cfg.lambda_H;
  j["init_std"] = cfg.init_std;
  j["seed"] = cfg.seed;
  j["threshold"] = cfg.threshold;
  j["threshold_rounds"] = cfg.threshold_rounds;
  j["fixed_Q"] = cfg.fixed_Q ? matrix_to_json(*cfg.fixed_Q) : json(nullptr);
  j["conserve_energy"] = cfg.conserve_energy;
  j["opinf_constant"] = cfg.opinf_constant;
  return j;
}

FitConfig fit_config_from_json(const json& j) {
  return parse_field("fit config", [&] {
    FitConfig cfg;
    if (j.contains("method")) cfg.method = method_from_string(j["method"].get<std::string>());
    if (j.contains("loss_mode")) cfg.loss_mode = loss_mode_from_string(j["loss_mode"].get<std::string>());
    cfg.steps = j.value("steps", cfg.steps);
    cfg.lr_min = j.value("lr_min", cfg.lr_min);
    cfg.lr_max = j.value("lr_max", cfg.lr_max);
    cfg.lr_cycle = j.value("lr_cycle", cfg.lr_cycle);
    cfg.lambda_H = j.value("lambda_H", cfg.lambda_H);
    cfg.init_std = j.value("init_std", cfg.init_std);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threshold = j.value("threshold", cfg.threshold);
    cfg.threshold_rounds = j.value("threshold_rounds", cfg.threshold_rounds);
    if (j.contains("fixed_Q") && !j["fixed_Q"].is_null()) cfg.fixed_Q = matrix_from_json(j["fixed_Q"]);
    cfg.conserve_energy = j.value("conserve_energy", cfg.conserve_energy);
    cfg.opinf_constant = j.value("opinf_constant", cfg.opinf_constant);
    cfg.validate();
    return cfg;
  });
}

json benchmark_config_to_json(const BenchmarkConfig& cfg) {
  json j;
  j["name"] = to_string(cfg.name);
  j["grid_points"] = cfg.grid_points;
  j["time_points"] = cfg.time_points;
  j["horizon"] = cfg.horizon;
  j["ic_params"] = cfg.ic_params;
  j["test_ic_params"] = cfg.test_ic_params;
  j["noise_std"] = cfg.noise_std;
  j["seed"] = cfg.seed;
  j["extras"] = cfg.extras;
  j["substeps"] = cfg.substeps;
  return j;
}

namespace {

json params_to_json(const StableParams& sp) {
  struct Visitor {
    json operator()(const OpinfParams& p) const {
      return {{"A", matrix_to_json(p.A)}, {"H", matrix_to_json(p.H)}, {"B", vector_to_json(p.B)}};
    }
    json operator()(const LasParams& p) const {
      return {{"J_raw", matrix_to_json(p.J_raw)},
              {"R_fac", matrix_to_json(p.R_fac)},
              {"Q_fac", matrix_to_json(p.Q_fac)},
              {"H_free", matrix_to_json(p.H_free)}};
    }
    json operator()(const GasParams& p) const {
      return {{"J_raw", matrix_to_json(p.J_raw)},
              {"R_fac", matrix_to_json(p.R_fac)},
              {"Q_fac", matrix_to_json(p.Q_fac)},
              {"H_ten", matrix_to_json(matricize(p.H_ten, 1))}};
    }
    json operator()(const AtrParams& p) const {
      return {{"J_raw", matrix_to_json(p.J_raw)},         {"R_fac", matrix_to_json(p.R_fac)},
              {"Q_fac", matrix_to_json(p.Q_fac)},         {"H_ten", matrix_to_json(matricize(p.H_ten, 1))},
              {"m", vector_to_json(p.m)},                 {"B_tilde", vector_to_json(p.B_tilde)}};
    }
  };
  return std::visit(Visitor{}, sp);
}

StableParams params_from_json(const std::string& method, const json& j) {
  auto M = [&](const char* k) { return matrix_from_json(j.at(k)); };
  auto V = [&](const char* k) { return vector_from_json(j.at(k)); };
  return parse_field("params", [&]() -> StableParams {
    switch (method_from_string(method)) {
      case Method::opinf: return OpinfParams{M("A"), M("H"), V("B")};
      case Method::lasmi: return LasParams{M("J_raw"), M("R_fac"), M("Q_fac"), M("H_free")};
      case Method::gasmi: return GasParams{M("J_raw"), M("R_fac"), M("Q_fac"), Tensor3::from_mode1(M("H_ten"))};
      case Method::atrmi:
        return AtrParams{M("J_raw"), M("R_fac"), M("Q_fac"), Tensor3::from_mode1(M("H_ten")), V("m"), V("B_tilde")};
    }
    throw Error(ErrorCode::ConfigError, "unknown method");
  });
}

}  // namespace

json model_to_json(const ModelFile& mf) {
  json j;
  j["n"] = mf.model.dim();
  j["method"] = mf.method;
  j["A"] = matrix_to_json(mf.model.A);
  j["H"] = matrix_to_json(mf.model.H);
  j["B"] = vector_to_json(mf.model.B);
  if (mf.m) j["m"] = vector_to_json(*mf.m);
  if (mf.Q) j["Q"] = matrix_to_json(*mf.Q);
  if (mf.params) j["params"] = params_to_json(*mf.params);
  if (mf.certificate) j["certificate"] = certificate_to_json(*mf.certificate);
  if (mf.basis) {
    j["basis"] = {{"V", matrix_to_json(mf.basis->V)},
                  {"singular_values", vector_to_json(mf.basis->singular_values)},
                  {"energy_captured", mf.basis->energy_captured}};
  }
  j["provenance"] = mf.provenance;
  return j;
}

ModelFile model_from_json(const json& j) {
  return parse_field("model file", [&] {
    ModelFile mf;
    mf.method = j.at("method").get<std::string>();
    mf.model = QuadModel(matrix_from_json(j.at("A")), matrix_from_json(j.at("H")), vector_from_json(j.at("B")));
    if (j.contains("n") && j["n"].get<Eigen::Index>() != mf.model.dim()) {
      throw Error(ErrorCode::ShapeMismatch, "model file: n does not match A");
    }
    if (j.contains("m")) mf.m = vector_from_json(j["m"]);
    if (j.contains("Q")) mf.Q = matrix_from_json(j["Q"]);
    if (j.contains("params")) mf.params = params_from_json(mf.method, j["params"]);
    if (j.contains("certificate")) mf.certificate = certificate_from_json(j["certificate"]);
    if (j.contains("basis")) {
      PodBasis b;
      b.V = matrix_from_json(j["basis"].at("V"));
      b.singular_values = vector_from_json(j["basis"].at("singular_values"));
      b.energy_captured = j["basis"].at("energy_captured").get<double>();
      check_orthonormal(b.V);
      if (b.V.cols() != mf.model.dim()) throw Error(ErrorCode::ShapeMismatch, "basis rank does not match the model");
      mf.basis = std::move(b);
    }
    if (j.contains("provenance")) mf.provenance = j["provenance"];
    return mf;
  });
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

void save_model(const fs::path& path, const ModelFile& mf) { write_json(path, model_to_json(mf)); }

ModelFile load_model(const fs::path& path) { return model_from_json(read_json(path)); }

void write_trajectory_csv(const fs::path& path, const MatrixXd& X, double t0, double dt) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  std::fputs("t", f);
  for (Eigen::Index i = 0; i < X.cols(); ++i) std::fprintf(f, ",x%ld", static_cast<long>(i + 1));
  std::fputc('\n', f);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    std::fprintf(f, "%.17g", t0 + dt * static_cast<double>(r));
    for (Eigen::Index c = 0; c < X.cols(); ++c) std::fprintf(f, ",%.17g", X(r, c));
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

MatrixXd read_trajectory_csv(const fs::path& path, VectorXd* t_out) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("t", 0) != 0) {
    throw Error(ErrorCode::IoError, path.string() + ": missing 't,x1,...' header");
  }
  const long cols = static_cast<long>(std::count(line.begin(), line.end(), ','));
  std::vector<double> values;
  std::vector<double> times;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const char* p = line.c_str();
    for (long c = 0; c <= cols; ++c) {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(p, &end);
      if (end == p || errno == ERANGE) throw Error(ErrorCode::IoError, path.string() + ": bad number in '" + line + "'");
      (c == 0 ? times : values).push_back(v);
      p = end;
      if (c < cols) {
        if (*p != ',') throw Error(ErrorCode::IoError, path.string() + ": short row '" + line + "'");
        ++p;
      }
    }
    if (*p != '\0' && *p != '\r') throw Error(ErrorCode::IoError, path.string() + ": long row '" + line + "'");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(times.size());
  if (rows < 1 || cols < 1) throw Error(ErrorCode::IoError, path.string() + ": no data rows");
  MatrixXd X = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), rows, cols);
  VectorXd t = Eigen::Map<const VectorXd>(times.data(), rows);
  if (rows > 1) {
    const double dt = (t(rows - 1) - t(0)) / static_cast<double>(rows - 1);
    if (!(dt > 0.0)) throw Error(ErrorCode::ConfigError, path.string() + ": t must increase");
    for (Eigen::Index r = 1; r < rows; ++r)
      if (std::abs(t(r) - t(r - 1) - dt) > 1e-9 * dt * std::max(1.0, std::abs(t(r)) / dt)) {
        throw Error(ErrorCode::ConfigError, path.string() + ": t is not uniformly spaced");
      }
  }
  if (t_out) *t_out = std::move(t);
  return X;
}

void save_dataset(const fs::path& dir, const Dataset& ds, const std::string& split, std::uint64_t seed) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t k = 0; k < ds.trajectories.size(); ++k) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "traj_%03zu", k);
    write_trajectory_csv(dir / (std::string(stem) + ".csv"), ds.trajectories[k], ds.t0, ds.dt);
    const bool has_deriv = k < ds.derivatives.size();
    if (has_deriv) write_trajectory_csv(dir / (std::string(stem) + "_dxdt.csv"), ds.derivatives[k], ds.t0, ds.dt);
    json side;
    side["dt"] = ds.dt;
    side["t0"] = ds.t0;
    side["name"] = ds.name;
    side["split"] = split;
    side["seed"] = seed;
    side["index"] = k;
    side["has_derivatives"] = has_deriv;
    side["meta"] = ds.meta;
    write_json(dir / (std::string(stem) + ".json"), side);
  }
}

Dataset load_dataset(const fs::path& dir_in) {
  fs::path dir = dir_in;
  if (fs::is_directory(dir / "train")) dir /= "train";
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const fs::path& p = e.path();
    const std::string stem = p.stem().string();
    const bool deriv = stem.size() >= 5 && stem.compare(stem.size() - 5, 5, "_dxdt") == 0;
    if (p.extension() == ".csv" && !deriv) files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::ConfigError, dir.string() + " holds no trajectories");

  Dataset ds;
  bool all_deriv = true;
  for (std::size_t k = 0; k < files.size(); ++k) {
    VectorXd t;
    ds.trajectories.push_back(read_trajectory_csv(files[k], &t));
    fs::path side = files[k];
    side.replace_extension(".json");
    double dt = t.size() > 1 ? (t(t.size() - 1) - t(0)) / static_cast<double>(t.size() - 1) : 0.0;
    if (fs::exists(side)) {
      const json j = read_json(side);
      dt = j.value("dt", dt);
      ds.name = j.value("name", ds.name);
      if (j.contains("meta")) ds.meta = j["meta"].get<std::map<std::string, double>>();
    }
    if (k == 0) {
      ds.dt = dt;
      ds.t0 = t(0);
    } else if (std::abs(dt - ds.dt) > 1e-9 * ds.dt) {
      throw Error(ErrorCode::ConfigError, "trajectories in " + dir.string() + " use different dt");
    }
    fs::path deriv = files[k];
    deriv.replace_filename(files[k].stem().string() + "_dxdt.csv");
    if (all_deriv && fs::exists(deriv)) {
      ds.derivatives.push_back(read_trajectory_csv(deriv));
    } else {
      all_deriv = false;
    }
  }
  if (!all_deriv) ds.derivatives.clear();
  ds.validate();
  return ds;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace stablequad::cli
