#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "stochwave/ensemble.hpp"
#include "stochwave/model.hpp"
#include "stochwave/wave.hpp"

namespace stochwave {

using json = nlohmann::json;

/// FNV-1a hash of the canonical config dump, rendered as 16 hex digits.
std::string config_hash(const json& cfg);

/// Parsed run configuration with sections mirroring the module boundaries.
/// CLI flags override file values.
struct RunConfig {
    json raw;

    // model
    std::string model_name = "nagumo";
    double a = 0.25, rho = 1.0, mu = 0.0;
    double eps = 0.01, varrho = 0.01, gamma = 5.0;
    // kernel
    std::string kernel_kind = "gaussian";
    double zeta = 1.0, decay = 1.0, width = 1.0;
    std::string kernel_path;
    // grid
    double L = 40.0;
    int N = 2048;
    std::string boundary = "dirichlet_on_x";
    // solver
    double newton_tol = 1e-10;
    int max_iter = 50;
    double sigma_step = 0.1;
    int k_max = 150;
    double dt_sg = 1e-3;
    double t_int = 0.0;  // 0: auto from the measured gap
    int order = 2;
    int cubic_realizations = 0;
    double cubic_T = 100.0;
    // simulation
    double dt = 1e-2;
    double T = 200.0;
    std::string frame = "wave_V";
    double k_up = 10.0;
    int record_every = 10;
    // ensemble
    int realizations = 500;
    std::vector<double> sigmas = {0.1};
    uint64_t seed = 1;
    std::vector<double> snapshot_times;
    double stability_epsilon = 0.1;
    double stability_eta = 1.0;

    int threads = 0;
    std::string out_dir = "out";

    ModelSpec make_model() const;
    GridPtr make_grid_ptr() const;
    std::vector<CovarianceKernel> make_kernels(const GridPtr& g) const;
    std::string hash() const { return config_hash(raw); }
};

RunConfig parse_config(const json& j);
RunConfig load_config(const std::string& path);

/// Columnar wave format: '#' header lines (hash, L, N, c, beta, sigma, mu),
/// then rows of x, phi components, psi components.
void write_wave_file(const std::string& path, const RunConfig& cfg,
                     const WavePair& wave, double sigma, double c_02 = 0.0);
WavePair read_wave_file(const std::string& path, GridPtr grid, int ncomp);

/// Tidy CSV with a '# config_hash=...' comment line and a header row.
void write_csv(const std::string& path, const std::string& hash,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

void write_profile_csv(const std::string& path, const std::string& hash,
                       const Profile& p, const std::vector<const Profile*>& extra = {},
                       const std::vector<std::string>& names = {});

void write_manifest(const std::filesystem::path& dir, const json& content);

}  // namespace stochwave
