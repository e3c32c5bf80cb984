#include "stochwave/io.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace stochwave {

std::string config_hash(const json& cfg) {
    std::string s = cfg.dump();
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {
template <typename T>
void get_to(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}
}  // namespace

RunConfig parse_config(const json& j) {
    RunConfig c;
    c.raw = j;
    if (j.contains("model")) {
        const auto& m = j["model"];
        get_to(m, "name", c.model_name);
        get_to(m, "a", c.a);
        get_to(m, "rho", c.rho);
        get_to(m, "mu", c.mu);
        get_to(m, "eps", c.eps);
        get_to(m, "varrho", c.varrho);
        get_to(m, "gamma", c.gamma);
    }
    if (j.contains("kernel")) {
        const auto& k = j["kernel"];
        get_to(k, "kind", c.kernel_kind);
        get_to(k, "zeta", c.zeta);
        get_to(k, "decay", c.decay);
        get_to(k, "width", c.width);
        get_to(k, "path", c.kernel_path);
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        get_to(g, "L", c.L);
        get_to(g, "N", c.N);
        get_to(g, "boundary", c.boundary);
    }
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        get_to(s, "newton_tol", c.newton_tol);
        get_to(s, "max_iter", c.max_iter);
        get_to(s, "sigma_step", c.sigma_step);
        get_to(s, "k_max", c.k_max);
        get_to(s, "dt_sg", c.dt_sg);
        get_to(s, "t_int", c.t_int);
        get_to(s, "order", c.order);
        get_to(s, "cubic_realizations", c.cubic_realizations);
        get_to(s, "cubic_T", c.cubic_T);
    }
    if (j.contains("simulation")) {
        const auto& s = j["simulation"];
        get_to(s, "dt", c.dt);
        get_to(s, "T", c.T);
        get_to(s, "frame", c.frame);
        get_to(s, "k_up", c.k_up);
        get_to(s, "record_every", c.record_every);
    }
    if (j.contains("ensemble")) {
        const auto& e = j["ensemble"];
        get_to(e, "realizations", c.realizations);
        get_to(e, "sigma", c.sigmas);
        get_to(e, "seed", c.seed);
        get_to(e, "snapshot_times", c.snapshot_times);
        get_to(e, "epsilon", c.stability_epsilon);
        get_to(e, "eta", c.stability_eta);
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    json j = json::parse(in, nullptr, true, true);  // allow comments
    return parse_config(j);
}

ModelSpec RunConfig::make_model() const {
    if (model_name == "nagumo") return nagumo_model(a, rho, mu);
    if (model_name == "fhn") return fhn_model(a, varrho, eps, gamma, mu);
    throw std::invalid_argument(
        "model.name must be 'nagumo' or 'fhn' (custom systems plug in through "
        "the library API)");
}

GridPtr RunConfig::make_grid_ptr() const {
    BoundaryMode mode = boundary == "periodic" ? BoundaryMode::periodic
                                               : BoundaryMode::dirichlet_on_x;
    return make_grid(L, N, mode);
}

std::vector<CovarianceKernel> RunConfig::make_kernels(const GridPtr& g) const {
    CovarianceKernel k;
    if (kernel_kind == "gaussian")
        k = make_gaussian_kernel(g, zeta);
    else if (kernel_kind == "exponential")
        k = make_exponential_kernel(g, decay);
    else if (kernel_kind == "tent")
        k = make_tent_kernel(g, width);
    else if (kernel_kind == "tabulated")
        k = load_tabulated_kernel(g, kernel_path);
    else
        throw std::invalid_argument("kernel.kind unknown: " + kernel_kind);
    int m = model_name == "fhn" ? 2 : 1;
    std::vector<CovarianceKernel> ks;
    for (int i = 0; i < m; ++i) ks.push_back(k);
    return ks;
}

void write_wave_file(const std::string& path, const RunConfig& cfg, const WavePair& wave,
                     double sigma, double c_02) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    const Grid& g = *wave.phi.grid;
    const int n = wave.phi.n_components;
    char buf[64];
    out << "# stochwave wave file\n";
    out << "# config_hash=" << cfg.hash() << "\n";
    out << "# model=" << cfg.model_name << " mu=" << cfg.mu << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", g.L);
    out << "# L=" << buf << " N=" << g.N << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", wave.c);
    out << "# c=" << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", wave.beta);
    out << "# beta=" << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", sigma);
    out << "# sigma=" << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", c_02);
    out << "# c_02=" << buf << "\n";
    out << "# columns: x";
    for (int c = 0; c < n; ++c) out << " phi" << c;
    for (int c = 0; c < n; ++c) out << " psi" << c;
    out << "\n";
    const bool has_psi = !wave.psi.values.empty();
    for (int i = 0; i < g.N; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", g.x(i));
        out << buf;
        for (int c = 0; c < n; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", wave.phi.at(c, i));
            out << ' ' << buf;
        }
        for (int c = 0; c < n; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", has_psi ? wave.psi.at(c, i) : 0.0);
            out << ' ' << buf;
        }
        out << '\n';
    }
}

WavePair read_wave_file(const std::string& path, GridPtr grid, int ncomp) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    WavePair w;
    w.phi = Profile(grid, ncomp);
    w.psi = Profile(grid, ncomp);
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto pos = line.find("c=");
            if (line.rfind("# c=", 0) == 0) w.c = std::stod(line.substr(4));
            (void)pos;
            continue;
        }
        std::istringstream ss(line);
        double x;
        ss >> x;
        for (int c = 0; c < ncomp; ++c) ss >> w.phi.at(c, row);
        for (int c = 0; c < ncomp; ++c) ss >> w.psi.at(c, row);
        ++row;
    }
    if (row != grid->N) throw std::runtime_error("wave file row count mismatch");
    w.phi_prime = derivative_profile(w.phi);
    return w;
}

void write_csv(const std::string& path, const std::string& hash,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "# config_hash=" << hash << "\n";
    for (size_t c = 0; c < columns.size(); ++c)
        out << columns[c] << (c + 1 < columns.size() ? "," : "\n");
    char buf[64];
    for (const auto& r : rows) {
        for (size_t c = 0; c < r.size(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", r[c]);
            out << buf << (c + 1 < r.size() ? "," : "\n");
        }
    }
}

void write_profile_csv(const std::string& path, const std::string& hash,
                       const Profile& p, const std::vector<const Profile*>& extra,
                       const std::vector<std::string>& names) {
    std::vector<std::string> cols = {"x"};
    for (int c = 0; c < p.n_components; ++c)
        cols.push_back((names.empty() ? "v" : names[0]) + std::to_string(c));
    for (size_t e = 0; e < extra.size(); ++e)
        for (int c = 0; c < extra[e]->n_components; ++c)
            cols.push_back((names.size() > e + 1 ? names[e + 1] : "w") +
                           std::to_string(c));
    std::vector<std::vector<double>> rows;
    const Grid& g = *p.grid;
    for (int i = 0; i < g.N; ++i) {
        std::vector<double> r = {g.x(i)};
        for (int c = 0; c < p.n_components; ++c) r.push_back(p.at(c, i));
        for (const Profile* e : extra)
            for (int c = 0; c < e->n_components; ++c) r.push_back(e->at(c, i));
        rows.push_back(std::move(r));
    }
    write_csv(path, hash, cols, rows);
}

void write_manifest(const std::filesystem::path& dir, const json& content) {
    json j = content;
    auto now = std::chrono::system_clock::now();
    j["timestamp_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    std::ofstream out(dir / "manifest.json");
    out << j.dump(2) << "\n";
}

}  // namespace stochwave
