#include "intreg/admm.hpp"
#include "intreg/prox.hpp"
#include "intreg/selection.hpp"
#include "intreg/sim.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace intreg;

namespace {

/// Each block is a (Y, X) or (Y, X, Z) tuple of 2-D arrays.
IntegratedDataset to_dataset(const std::vector<py::tuple>& blocks) {
    std::vector<DatasetBlock> out;
    for (const auto& t : blocks) {
        if (t.size() != 2 && t.size() != 3) throw py::value_error("each block must be (Y, X) or (Y, X, Z)");
        DatasetBlock b;
        b.Y = t[0].cast<Matrix>();
        b.X = t[1].cast<Matrix>();
        b.Z = t.size() == 3 ? t[2].cast<Matrix>() : Matrix(b.Y.rows(), 0);
        out.push_back(std::move(b));
    }
    return IntegratedDataset(std::move(out));
}

py::list to_blocks(const IntegratedDataset& data) {
    py::list out;
    for (const auto& b : data.blocks()) out.append(py::make_tuple(b.Y, b.X, b.Z));
    return out;
}

admm::SolverOptions solver_options(double tol, long max_iter) {
    admm::SolverOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Sparse group-lasso + lasso multivariate regression across datasets";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<UnsupportedScenarioError>(m, "UnsupportedScenarioError", PyExc_ValueError);
    py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError", PyExc_ArithmeticError);
    py::register_exception<DivergedError>(m, "DivergedError", PyExc_RuntimeError);

    py::class_<HyperParams>(m, "HyperParams")
        .def(py::init([](double lambda, double gamma, double rho) {
                 HyperParams hp{lambda, gamma, rho};
                 hp.validate();
                 return hp;
             }),
             py::arg("lam"), py::arg("gamma"), py::arg("rho") = 1.0)
        .def_readonly("lam", &HyperParams::lambda)
        .def_readonly("gamma", &HyperParams::gamma)
        .def_readonly("rho", &HyperParams::rho)
        .def("__repr__", [](const HyperParams& h) {
            return "HyperParams(lam=" + std::to_string(h.lambda) + ", gamma=" + std::to_string(h.gamma) +
                   ", rho=" + std::to_string(h.rho) + ")";
        });

    py::class_<ModelFit>(m, "ModelFit")
        .def_readonly("alpha", &ModelFit::alpha)
        .def_readonly("B", &ModelFit::B)
        .def_readonly("C", &ModelFit::C)
        .def_property_readonly("support_B", [](const ModelFit& f) { return Eigen::MatrixXi(f.support_B.cast<int>()); })
        .def_property_readonly("active_groups", &ModelFit::active_groups)
        .def_property_readonly("homogeneous", &ModelFit::homogeneous);

    py::class_<admm::FitReport>(m, "FitReport")
        .def_readonly("fit", &admm::FitReport::fit)
        .def_readonly("iterations", &admm::FitReport::iterations)
        .def_readonly("converged", &admm::FitReport::converged)
        .def_readonly("kkt_residual", &admm::FitReport::kkt_residual)
        .def_readonly("consensus_gap", &admm::FitReport::consensus_gap)
        .def_readonly("objective_trace", &admm::FitReport::objective_trace)
        .def_readonly("lagrangian_trace", &admm::FitReport::lagrangian_trace);

    py::class_<selection::CvResult>(m, "CvResult")
        .def_property_readonly("lambdas", [](const selection::CvResult& r) { return r.grid.lambdas; })
        .def_property_readonly("gammas", [](const selection::CvResult& r) { return r.grid.gammas; })
        .def_readonly("cv_matrix", &selection::CvResult::cv_matrix)
        .def_readonly("best_lambda", &selection::CvResult::best_lambda)
        .def_readonly("best_gamma", &selection::CvResult::best_gamma)
        .def_readonly("refit", &selection::CvResult::refit);

    m.def("soft_threshold", py::overload_cast<double, double>(&prox::soft_threshold), py::arg("a"), py::arg("b"));
    m.def("group_soft_threshold", py::overload_cast<const Vector&, double>(&prox::soft_threshold), py::arg("c"),
          py::arg("d"));

    m.def(
        "fit",
        [](const std::vector<py::tuple>& blocks, double lambda, double gamma, double rho, double tol, long max_iter) {
            const auto data = to_dataset(blocks);
            py::gil_scoped_release release;
            return admm::fit(data, {lambda, gamma, rho}, solver_options(tol, max_iter));
        },
        py::arg("blocks"), py::arg("lam"), py::arg("gamma"), py::arg("rho") = 1.0, py::arg("tol") = 1e-7,
        py::arg("max_iter") = 10000, "Fits at one (lambda, gamma); blocks are (Y, X[, Z]) tuples.");

    m.def(
        "objective",
        [](const std::vector<py::tuple>& blocks, const ModelFit& fit, double lambda, double gamma) {
            return objective(to_dataset(blocks), fit, {lambda, gamma, 1.0});
        },
        py::arg("blocks"), py::arg("fit"), py::arg("lam"), py::arg("gamma"));

    m.def(
        "kkt_residual",
        [](const std::vector<py::tuple>& blocks, const ModelFit& fit, double lambda, double gamma) {
            return admm::kkt_residual(to_dataset(blocks), fit, {lambda, gamma, 1.0});
        },
        py::arg("blocks"), py::arg("fit"), py::arg("lam"), py::arg("gamma"));

    m.def(
        "cross_validate",
        [](const std::vector<py::tuple>& blocks, std::optional<std::vector<double>> lambdas,
           std::optional<std::vector<double>> gammas, int grid_size, int k, std::uint64_t seed, int threads, double tol) {
            const auto data = to_dataset(blocks);
            selection::GridSpec spec;
            spec.count = grid_size;
            if (lambdas || gammas) {
                const auto fallback = selection::default_grid(data, grid_size);
                spec.grid = selection::CvGrid::make(lambdas.value_or(fallback.lambdas), gammas.value_or(fallback.gammas));
            }
            selection::SelectOptions opts;
            opts.threads = threads;
            opts.solver.tol = tol;
            const auto grid = spec.resolve(data);
            py::gil_scoped_release release;
            return selection::select(data, grid, k, seed, opts);
        },
        py::arg("blocks"), py::arg("lambdas") = py::none(), py::arg("gammas") = py::none(), py::arg("grid_size") = 15,
        py::arg("k") = 5, py::arg("seed") = 1, py::arg("threads") = 1, py::arg("tol") = 1e-7);

    m.def(
        "simulate_data",
        [](const std::string& scenario, int replicate, std::uint64_t seed, int n_test) {
            auto cfg = sim::SimConfig::from_name(scenario);
            cfg.seed = seed;
            cfg.n_test = n_test;
            const auto d = sim::generate(cfg, replicate);
            py::list test;
            for (const auto& b : d.test) test.append(py::make_tuple(b.Y, b.X, b.Z));
            py::dict out;
            out["train"] = to_blocks(d.train);
            out["test"] = test;
            out["B_star"] = d.truth.B_star;
            out["C_star"] = d.truth.C_star;
            return out;
        },
        py::arg("scenario"), py::arg("replicate") = 0, py::arg("seed") = 1, py::arg("n_test") = 1000,
        "Training blocks, held-out blocks and true coefficients for one replicate.");

    m.def(
        "fpr_fnr",
        [](const ModelFit& fit, const std::string& scenario, const std::string& mode) {
            const auto cfg = sim::SimConfig::from_name(scenario);
            const auto r = sim::fpr_fnr(fit, sim::truth(cfg.M, cfg.s), sim::parse_metric_mode(mode));
            return py::make_tuple(r.fpr, r.fnr);
        },
        py::arg("fit"), py::arg("scenario"), py::arg("mode") = "paper");

    m.def(
        "run_study",
        [](const std::vector<std::string>& scenarios, int replicates, const std::vector<std::string>& methods,
           int grid_size, int n_test, std::uint64_t seed, const std::string& mode, int threads) {
            std::vector<sim::SimConfig> cfgs;
            for (const auto& s : scenarios) {
                auto c = sim::SimConfig::from_name(s);
                c.replicates = replicates;
                c.n_test = n_test;
                c.seed = seed;
                cfgs.push_back(c);
            }
            sim::StudyOptions opts;
            opts.methods.clear();
            for (const auto& name : methods) opts.methods.push_back(sim::parse_method(name));
            opts.method.grid.count = grid_size;
            opts.mode = sim::parse_metric_mode(mode);
            opts.threads = threads;
            sim::StudyResult study;
            {
                py::gil_scoped_release release;
                study = sim::run_study(cfgs, opts);
            }
            py::list rows;
            for (const auto& r : study.records) {
                py::dict row;
                row["scenario"] = r.scenario;
                row["method"] = sim::to_string(r.method);
                row["dataset"] = r.dataset;
                row["response"] = r.response;
                row["replicate"] = r.replicate;
                row["mse"] = r.mse;
                row["fpr"] = r.fpr;
                row["fnr"] = r.fnr;
                rows.append(row);
            }
            return py::make_tuple(rows, study.failures.size());
        },
        py::arg("scenarios"), py::arg("replicates") = 100, py::arg("methods") = std::vector<std::string>{"MR", "UR", "lasso", "mlasso"},
        py::arg("grid_size") = 15, py::arg("n_test") = 1000, py::arg("seed") = 1, py::arg("mode") = "paper",
        py::arg("threads") = 1, "Per-replicate boxplot rows and the number of failed method fits.");
}
