#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "stablequad/optimize.hpp"
#include "stablequad/reduction.hpp"
#include "stablequad/stableparam.hpp"

namespace stablequad::cli {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kToolVersion = "0.3.0";

enum ExitCode { kExitOk = 0, kExitInvalid = 1, kExitConfig = 2, kExitIo = 3, kExitNumerical = 4 };

/// Maps a library error onto the documented exit codes.
int exit_code_for(ErrorCode code);

// Matrices are stored row-major as nested arrays; vectors as flat arrays.
json matrix_to_json(const MatrixXd& M);
MatrixXd matrix_from_json(const json& j);
json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const json& j);

json certificate_to_json(const StabilityCertificate& c);
StabilityCertificate certificate_from_json(const json& j);

json fit_config_to_json(const FitConfig& cfg);
FitConfig fit_config_from_json(const json& j);

json benchmark_config_to_json(const BenchmarkConfig& cfg);

/// Everything evaluate and certify need, in one self-contained file.
struct ModelFile {
  std::string method;  // opinf | lasmi | gasmi | atrmi | truth
  QuadModel model;
  std::optional<VectorXd> m;
  std::optional<MatrixXd> Q;
  std::optional<StableParams> params;
  std::optional<StabilityCertificate> certificate;
  std::optional<PodBasis> basis;
  json provenance = json::object();
};

json model_to_json(const ModelFile& mf);
ModelFile model_from_json(const json& j);
void save_model(const fs::path& path, const ModelFile& mf);
ModelFile load_model(const fs::path& path);

/// Header "t,x1,...,xn"; rows are snapshots; %.17g decimals.
void write_trajectory_csv(const fs::path& path, const MatrixXd& X, double t0, double dt);
/// Returns the snapshots (rows) and fills t. Throws IoError on parse
/// failures and ConfigError when t is not uniformly spaced.
MatrixXd read_trajectory_csv(const fs::path& path, VectorXd* t = nullptr);

/// traj_000.csv (+ _dxdt.csv when derivatives are present) and a sidecar
/// traj_000.json per trajectory.
void save_dataset(const fs::path& dir, const Dataset& ds, const std::string& split, std::uint64_t seed);
/// Reads a directory written by save_dataset. A directory holding a train/
/// subdirectory is read through it.
Dataset load_dataset(const fs::path& dir);

json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& j);

/// 64-bit FNV-1a of a string, used as the config hash in provenance.
std::uint64_t fnv1a(const std::string& s);

/// Entry point of the stablequad binary.
int run_cli(int argc, char** argv);

}  // namespace stablequad::cli
