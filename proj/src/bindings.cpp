#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stochwave/ensemble.hpp"
#include "stochwave/expansion.hpp"
#include "stochwave/io.hpp"
#include "stochwave/simulate.hpp"

namespace py = pybind11;
using namespace stochwave;

namespace {

py::array_t<double> vec_to_array(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    auto r = out.mutable_unchecked<1>();
    for (py::ssize_t i = 0; i < r.shape(0); ++i) r(i) = v[i];
    return out;
}

py::array_t<double> profile_to_array(const Profile& p) {
    const int n = p.n_components, N = p.grid_N();
    py::array_t<double> out({n, N});
    auto r = out.mutable_unchecked<2>();
    for (int c = 0; c < n; ++c)
        for (int i = 0; i < N; ++i) r(c, i) = p.at(c, i);
    return out;
}

Profile array_to_profile(const GridPtr& g, py::array_t<double, py::array::c_style> a) {
    auto buf = a.unchecked();
    Profile p(g, buf.ndim() == 1 ? 1 : static_cast<int>(buf.shape(0)));
    if (buf.ndim() == 1) {
        if (buf.shape(0) != g->N) throw std::invalid_argument("array length != grid N");
        for (int i = 0; i < g->N; ++i) p.at(0, i) = buf(i);
    } else {
        if (buf.shape(1) != g->N) throw std::invalid_argument("array width != grid N");
        for (int c = 0; c < p.n_components; ++c)
            for (int i = 0; i < g->N; ++i) p.at(c, i) = buf(c, i);
    }
    return p;
}

py::dict wave_to_dict(const GridPtr& g, const WavePair& w) {
    py::dict d;
    py::array_t<double> x(g->N);
    auto rx = x.mutable_unchecked<1>();
    for (int i = 0; i < g->N; ++i) rx(i) = g->x(i);
    d["x"] = x;
    d["phi"] = profile_to_array(w.phi);
    if (!w.psi.values.empty()) d["psi"] = profile_to_array(w.psi);
    d["phi_prime"] = profile_to_array(w.phi_prime);
    d["c"] = w.c;
    d["beta"] = w.beta;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "stochastic travelling waves for reaction-diffusion SPDEs";

    py::class_<Grid, std::shared_ptr<Grid>>(m, "Grid")
        .def(py::init([](double L, int N, const std::string& mode) {
                 return std::make_shared<Grid>(
                     L, N, mode == "periodic" ? BoundaryMode::periodic
                                              : BoundaryMode::dirichlet_on_x);
             }),
             py::arg("L"), py::arg("N"), py::arg("boundary") = "dirichlet_on_x")
        .def_readonly("L", &Grid::L)
        .def_readonly("N", &Grid::N)
        .def_readonly("dx", &Grid::dx)
        .def("x", [](const Grid& g) {
            py::array_t<double> out(g.N);
            auto r = out.mutable_unchecked<1>();
            for (int i = 0; i < g.N; ++i) r(i) = g.x(i);
            return out;
        });

    py::class_<ModelSpec>(m, "ModelSpec")
        .def_readonly("name", &ModelSpec::name)
        .def_readonly("n", &ModelSpec::n)
        .def_readonly("m", &ModelSpec::m)
        .def_readonly("mu", &ModelSpec::mu);
    m.def("nagumo_model", &nagumo_model, py::arg("a"), py::arg("rho") = 1.0,
          py::arg("mu") = 0.0);
    m.def("fhn_model", &fhn_model, py::arg("a"), py::arg("varrho"), py::arg("eps"),
          py::arg("gamma"), py::arg("mu") = 0.0);

    py::class_<CovarianceKernel>(m, "CovarianceKernel")
        .def_readonly("q0", &CovarianceKernel::q0)
        .def_property_readonly("q_hat", [](const CovarianceKernel& k) {
            return vec_to_array(k.q_hat);
        });
    m.def("gaussian_kernel", &make_gaussian_kernel, py::arg("grid"), py::arg("zeta"));
    m.def("exponential_kernel", &make_exponential_kernel, py::arg("grid"),
          py::arg("decay"));
    m.def("tent_kernel", &make_tent_kernel, py::arg("grid"), py::arg("width"));
    m.def("sqrt_kernel", [](const CovarianceKernel& k) {
        return vec_to_array(sqrt_kernel(k));
    });
    m.def("convolve_q", [](const CovarianceKernel& k, const GridPtr& g,
                           py::array_t<double, py::array::c_style> v) {
        return profile_to_array(convolve_q(k, array_to_profile(g, v)));
    });

    py::class_<NoiseSampler>(m, "NoiseSampler")
        .def(py::init<std::vector<CovarianceKernel>, uint64_t>(), py::arg("kernels"),
             py::arg("seed"))
        .def("sample_increment", [](NoiseSampler& s, double dt) {
            return profile_to_array(s.sample_increment(dt));
        });

    py::class_<WavePair>(m, "WavePair");

    m.def("nagumo_explicit",
          [](const GridPtr& g, double a, double rho) {
              auto w = nagumo_explicit(g, a, rho);
              return wave_to_dict(g, w);
          },
          py::arg("grid"), py::arg("a"), py::arg("rho") = 1.0);

    m.def("solve_wave",
          [](const ModelSpec& model, const GridPtr& grid, int order) {
              BvpOptions opt;
              opt.order = order;
              WavePair w = model.name == "fhn"
                               ? solve_fhn_wave(model, grid, opt)
                               : solve_wave_bvp(model,
                                                nagumo_explicit(grid,
                                                                model.params.at("a"),
                                                                model.params.at("rho")),
                                                opt);
              py::dict d = wave_to_dict(grid, w);
              return py::make_tuple(w, d);
          },
          py::arg("model"), py::arg("grid"), py::arg("order") = 2,
          "returns (WavePair handle, dict of arrays)");

    m.def("solve_instantaneous_wave",
          [](const ModelSpec& model, const std::vector<CovarianceKernel>& kernels,
             const WavePair& wave, double sigma) {
              auto sw = solve_instantaneous_wave(model, kernels, wave, sigma);
              py::dict d = wave_to_dict(wave.phi.grid, sw.wave);
              d["sigma"] = sw.sigma;
              d["converged"] = sw.converged;
              return d;
          },
          py::arg("model"), py::arg("kernels"), py::arg("wave"), py::arg("sigma"));

    m.def("expand_second_order",
          [](const ModelSpec& model, const std::vector<CovarianceKernel>& kernels,
             const WavePair& wave) {
              auto ex = expand_second_order(model, kernels, wave);
              py::dict d;
              d["c_02"] = ex.c_02;
              d["phi_02"] = profile_to_array(ex.phi_02);
              d["bordered_multiplier"] = ex.bordered_multiplier;
              return d;
          },
          py::arg("model"), py::arg("kernels"), py::arg("wave"));

    m.def("sne_wave",
          [](const GridPtr& grid, double a, double sigma, double q0) {
              auto s = sne_wave(grid, a, sigma, q0);
              py::dict d;
              d["phi"] = profile_to_array(s.phi);
              d["c"] = s.c;
              d["a_eff"] = s.a_eff;
              return d;
          },
          py::arg("grid"), py::arg("a"), py::arg("sigma"), py::arg("q0"));

    m.def("expected_gamma2_rate",
          [](const ModelSpec& model, const std::vector<CovarianceKernel>& kernels,
             const WavePair& wave, int k_max, double dt_sg, double t_int, int threads) {
              auto ctx = make_expansion_context(model, kernels, wave, k_max, dt_sg, t_int);
              return expected_gamma2_rate(ctx, threads);
          },
          py::arg("model"), py::arg("kernels"), py::arg("wave"), py::arg("k_max") = 150,
          py::arg("dt_sg") = 1e-3, py::arg("t_int") = 0.0, py::arg("threads") = 0);

    m.def("orbital_drift_shape",
          [](const ModelSpec& model, const std::vector<CovarianceKernel>& kernels,
             const WavePair& wave, int k_max, double dt_sg, double t_int, int threads) {
              auto ctx = make_expansion_context(model, kernels, wave, k_max, dt_sg, t_int);
              return profile_to_array(orbital_drift_shape(ctx, threads));
          },
          py::arg("model"), py::arg("kernels"), py::arg("wave"), py::arg("k_max") = 150,
          py::arg("dt_sg") = 1e-3, py::arg("t_int") = 0.0, py::arg("threads") = 0);

    m.def("predicted_v1_norm",
          [](const ModelSpec& model, const std::vector<CovarianceKernel>& kernels,
             const WavePair& wave, std::vector<double> times, int k_max, double dt_sg,
             double t_int, int threads) {
              auto ctx = make_expansion_context(model, kernels, wave, k_max, dt_sg, t_int);
              return predicted_V1_norm(ctx, times, threads);
          },
          py::arg("model"), py::arg("kernels"), py::arg("wave"), py::arg("times"),
          py::arg("k_max") = 150, py::arg("dt_sg") = 1e-3, py::arg("t_int") = 0.0,
          py::arg("threads") = 0);

    m.def("cutoff_low", &cutoff_low);
    m.def("cutoff_high", &cutoff_high, py::arg("theta"), py::arg("k_up") = 10.0);

    m.def("simulate",
          [](const ModelSpec& model, const std::vector<CovarianceKernel>& kernels,
             const WavePair& wave, double sigma, double T, double dt,
             const std::string& frame, uint64_t seed, int record_every) {
              auto sw = solve_instantaneous_wave(model, kernels, wave, sigma);
              SimSetup setup = make_sim_setup(model, kernels, wave, sw);
              SimConfig cfg;
              cfg.sigma = sigma;
              cfg.T = T;
              cfg.dt = dt;
              cfg.frame = frame == "lab_U" ? Frame::lab_U : Frame::wave_V;
              cfg.seed = seed;
              cfg.record_every = record_every;
              auto path = run_simulation(setup, cfg);
              py::dict d;
              d["t"] = vec_to_array(path.times);
              d["gamma"] = vec_to_array(path.gamma);
              d["v_l2sq"] = vec_to_array(path.v_l2sq);
              d["c_sigma"] = sw.wave.c;
              return d;
          },
          py::arg("model"), py::arg("kernels"), py::arg("wave"), py::arg("sigma"),
          py::arg("T") = 20.0, py::arg("dt") = 1e-2, py::arg("frame") = "wave_V",
          py::arg("seed") = 1, py::arg("record_every") = 10);
}
