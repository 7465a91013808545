#include "intreg/cli.hpp"

#include "intreg/io.hpp"
#include "intreg/sim.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace intreg::cli {

using json = nlohmann::ordered_json;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

double to_double(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError(std::string("invalid ") + what + " value '" + s + "'");
    }
}

/// Every setting a subcommand may use. Filled from --config first, then
/// overridden by explicit flags.
struct RunConfig {
    std::vector<std::string> blocks;
    std::uint64_t seed = 1;
    int k = 5;
    double lambda = 0.0;
    double gamma = 0.0;
    double rho = 1.0;
    std::string grid = "auto";
    double tol = admm::SolverOptions{}.tol;
    long max_iter = admm::SolverOptions{}.max_iter;
    bool standardize = false;
    std::string metric_mode = "paper";
    std::string out = ".";
    int threads = 1;
    // simulate
    std::vector<std::string> scenarios;
    int replicates = 100;
    int n_test = 1000;
    bool fixed_design = false;
    std::string methods = "MR,UR,lasso,mlasso";
    // report
    std::string model;
    std::string scale = "original";

    admm::SolverOptions solver() const {
        admm::SolverOptions o;
        o.tol = tol;
        o.max_iter = max_iter;
        return o;
    }
};

void apply_config_file(RunConfig& c, const std::string& path) {
    json j;
    try {
        j = json::parse(io::read_text(path));
    } catch (const json::exception& e) {
        throw UsageError("config file " + path + " is not valid JSON: " + e.what());
    } catch (const io::DataError& e) {
        throw UsageError(e.what());
    }
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& key = it.key();
            const auto& v = it.value();
            if (key == "blocks") c.blocks = v.get<std::vector<std::string>>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "k") c.k = v.get<int>();
            else if (key == "lambda") c.lambda = v.get<double>();
            else if (key == "gamma") c.gamma = v.get<double>();
            else if (key == "rho") c.rho = v.get<double>();
            else if (key == "grid") c.grid = v.get<std::string>();
            else if (key == "tol") c.tol = v.get<double>();
            else if (key == "max_iter") c.max_iter = v.get<long>();
            else if (key == "standardize") c.standardize = v.get<bool>();
            else if (key == "metric_mode") c.metric_mode = v.get<std::string>();
            else if (key == "out") c.out = v.get<std::string>();
            else if (key == "threads") c.threads = v.get<int>();
            else if (key == "scenarios") c.scenarios = v.get<std::vector<std::string>>();
            else if (key == "replicates") c.replicates = v.get<int>();
            else if (key == "n_test") c.n_test = v.get<int>();
            else if (key == "fixed_design") c.fixed_design = v.get<bool>();
            else if (key == "methods") c.methods = v.get<std::string>();
            else if (key == "model") c.model = v.get<std::string>();
            else if (key == "scale") c.scale = v.get<std::string>();
            else throw UsageError("unknown config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw UsageError("config file " + path + ": " + e.what());
    }
}

/// Registers every shared flag on a subcommand, writing into `flags`.
struct Flags {
    std::string config;
    RunConfig values;
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> setters;

    template <class T>
    void add(CLI::App& app, const std::string& name, T RunConfig::*field, const std::string& help) {
        auto* opt = app.add_option(name, values.*field, help);
        setters.emplace_back(opt, [this, field](RunConfig& c) { c.*field = values.*field; });
    }

    RunConfig resolve() const {
        RunConfig c;
        if (!config.empty()) apply_config_file(c, config);
        for (const auto& [opt, set] : setters)
            if (opt->count() > 0) set(c);
        return c;
    }
};

void add_common(CLI::App& app, Flags& f) {
    app.add_option("--config", f.config, "JSON file mirroring the command-line flags");
    f.add(app, "--seed", &RunConfig::seed, "Seed for every random choice");
    f.add(app, "--out", &RunConfig::out, "Output directory");
    f.add(app, "--threads", &RunConfig::threads, "Worker threads");
}

void add_data(CLI::App& app, Flags& f) {
    f.add(app, "--block", &RunConfig::blocks, "Directory with y.csv, x.csv and optional z.csv (repeat per dataset)");
    f.add(app, "--tol", &RunConfig::tol, "Convergence threshold on the augmented Lagrangian");
    f.add(app, "--max-iter", &RunConfig::max_iter, "Maximum ADMM iterations");
    f.add(app, "--rho", &RunConfig::rho, "ADMM penalty parameter");
    f.add(app, "--standardize", &RunConfig::standardize, "Standardize covariates per dataset (true/false)");
}

void validate_common(const RunConfig& c) {
    if (c.threads < 1) throw UsageError("--threads must be >= 1");
    if (!(c.tol > 0.0)) throw UsageError("--tol must be > 0");
    if (c.max_iter < 1) throw UsageError("--max-iter must be >= 1");
    if (!(c.rho > 0.0)) throw UsageError("--rho must be > 0");
}

void validate_blocks(const RunConfig& c) {
    if (c.blocks.empty()) throw UsageError("at least one --block directory is required");
    for (const auto& b : c.blocks) {
        const auto paths = io::block_paths_in(b);
        if (!io::fs::exists(paths.y) || !io::fs::exists(paths.x))
            throw UsageError("block directory '" + b + "' must contain y.csv and x.csv");
    }
}

/// Loaded data, optionally standardized.
struct Prepared {
    io::LoadedDataset loaded;
    std::optional<io::Standardized> standardized;

    const IntegratedDataset& working() const { return standardized ? standardized->data : loaded.data; }
};

Prepared prepare(const RunConfig& c) {
    std::vector<io::BlockPaths> paths;
    for (const auto& b : c.blocks) paths.push_back(io::block_paths_in(b));
    Prepared p{io::load_dataset(paths), std::nullopt};
    if (c.standardize) p.standardized = io::standardize(p.loaded.data, &p.loaded.names);
    return p;
}

io::ModelDocument document(const Prepared& p, const HyperParams& hp, const admm::FitReport& report) {
    io::ModelDocument d;
    d.hp = hp;
    d.names = p.loaded.names;
    d.iterations = report.iterations;
    d.converged = report.converged;
    d.kkt_residual = report.kkt_residual;
    d.consensus_gap = report.consensus_gap;
    d.objective = objective(p.working(), report.fit, hp);
    if (p.standardized) {
        d.fit = io::back_transform(report.fit, p.standardized->scaling);
        d.standardized_fit = report.fit;
    } else {
        d.fit = report.fit;
    }
    return d;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

int cmd_fit(const RunConfig& c) {
    validate_common(c);
    validate_blocks(c);
    const HyperParams hp{c.lambda, c.gamma, c.rho};
    try {
        hp.validate();
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    const Prepared p = prepare(c);
    const auto report = admm::fit(p.working(), hp, c.solver());
    const io::fs::path out(c.out);
    io::atomic_write(out / "model.json", dump(io::model_to_json(document(p, hp, report))));
    std::cout << "wrote " << (out / "model.json").string() << "\n";
    return ok;
}

int cmd_cv(const RunConfig& c) {
    validate_common(c);
    validate_blocks(c);
    if (c.k < 2) throw UsageError("--k must be >= 2");
    const auto spec = parse_grid_spec(c.grid);
    const Prepared p = prepare(c);
    const auto grid = spec.resolve(p.working());
    selection::SelectOptions so;
    so.solver = c.solver();
    so.rho = c.rho;
    so.threads = c.threads;
    const auto cv = selection::select(p.working(), grid, c.k, c.seed, so);

    const HyperParams hp{cv.best_lambda, cv.best_gamma, c.rho};
    const io::fs::path out(c.out);
    io::atomic_write(out / "cv_matrix.csv", io::format_cv_matrix(cv));
    io::atomic_write(out / "model.json", dump(io::model_to_json(document(p, hp, cv.refit))));
    json summary{{"format", "intreg-cv/1"},
                 {"k", c.k},
                 {"seed", c.seed},
                 {"lambdas", cv.grid.lambdas},
                 {"gammas", cv.grid.gammas},
                 {"best_lambda", cv.best_lambda},
                 {"best_gamma", cv.best_gamma},
                 {"best_cv", cv.cv_matrix.minCoeff()}};
    io::atomic_write(out / "cv.json", dump(summary));
    std::cout << "selected lambda=" << io::format_double(cv.best_lambda)
              << " gamma=" << io::format_double(cv.best_gamma) << "\n";
    return ok;
}

int cmd_simulate(const RunConfig& c) {
    validate_common(c);
    if (c.scenarios.empty()) throw UsageError("at least one --scenario is required (or 'paper')");
    if (c.k < 2) throw UsageError("--k must be >= 2");
    if (c.replicates < 1 || c.n_test < 1) throw UsageError("--replicates and --n-test must be >= 1");

    sim::StudyOptions so;
    std::vector<sim::SimConfig> scenarios;
    try {
        so.mode = sim::parse_metric_mode(c.metric_mode);
        so.methods.clear();
        for (const auto& m : split(c.methods, ',')) so.methods.push_back(sim::parse_method(m));
        for (const auto& entry : c.scenarios)
            for (const auto& name : split(entry, ',')) {
                auto add = [&](sim::SimConfig s) {
                    s.seed = c.seed;
                    s.replicates = c.replicates;
                    s.n_test = c.n_test;
                    s.fixed_design = c.fixed_design;
                    scenarios.push_back(s);
                };
                if (name == "paper") {
                    for (const auto& s : sim::paper_scenarios()) add(s);
                } else {
                    add(sim::SimConfig::from_name(name));
                }
            }
    } catch (const UnsupportedScenarioError& e) {
        throw UsageError(e.what());
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    if (so.methods.empty()) throw UsageError("--methods lists no methods");
    so.method.grid = parse_grid_spec(c.grid);
    so.method.K = c.k;
    so.method.select.solver = c.solver();
    so.method.select.rho = c.rho;
    so.threads = c.threads;

    const auto study = sim::run_study(scenarios, so);
    const io::fs::path out(c.out);
    io::atomic_write(out / "study.json", dump(io::study_to_json(study)));
    io::atomic_write(out / "boxplot.csv", io::format_boxplot_csv(study));
    std::cout << "wrote " << study.records.size() << " rows, " << study.failures.size() << " failures\n";
    return ok;
}

int cmd_report(const RunConfig& c) {
    if (c.model.empty()) throw UsageError("--model is required");
    if (c.scale != "original" && c.scale != "standardized")
        throw UsageError("--scale must be 'original' or 'standardized'");
    const auto doc = io::model_from_json(json::parse(io::read_text(c.model)));
    const bool standardized = c.scale == "standardized";
    if (standardized && !doc.standardized_fit)
        throw UsageError("model was not fitted on standardized covariates");
    const ModelFit& fit = standardized ? *doc.standardized_fit : doc.fit;

    auto label = [](const std::vector<std::string>& names, Index i, const char* prefix) {
        return static_cast<std::size_t>(i) < names.size() ? names[static_cast<std::size_t>(i)]
                                                          : prefix + std::to_string(i + 1);
    };
    std::string csv = "dataset,kind,covariate,response,coefficient,support\n";
    std::ostringstream text;
    text << "lambda " << io::format_double(doc.hp.lambda) << "  gamma " << io::format_double(doc.hp.gamma)
         << "  rho " << io::format_double(doc.hp.rho) << "\n"
         << "iterations " << doc.iterations << (doc.converged ? " (converged)" : " (not converged)") << "\n"
         << "kkt_residual " << io::format_double(doc.kkt_residual) << "  consensus_gap "
         << io::format_double(doc.consensus_gap) << "  objective " << io::format_double(doc.objective) << "\n"
         << "active shared groups " << fit.active_groups() << " of " << fit.support_B.size()
         << (fit.homogeneous() ? " (homogeneous)" : "") << "\n";
    json tables = json::array();
    for (std::size_t m = 0; m < fit.size(); ++m) {
        const auto* znames = m < doc.names.z.size() ? &doc.names.z[m] : nullptr;
        const std::vector<std::string> empty;
        text << "dataset " << m + 1 << ": alpha";
        for (Index k = 0; k < fit.alpha[m].size(); ++k) text << " " << io::format_double(fit.alpha[m][k]);
        text << "\n";
        json rows = json::array();
        auto emit = [&](const Matrix& A, const char* kind, const std::vector<std::string>& names, const char* prefix) {
            for (Index i = 0; i < A.rows(); ++i)
                for (Index k = 0; k < A.cols(); ++k) {
                    const std::string cov = label(names, i, prefix);
                    const std::string resp = label(doc.names.y, k, "y");
                    const bool nz = A(i, k) != 0.0;
                    csv += std::to_string(m + 1) + "," + kind + "," + cov + "," + resp + "," +
                           io::format_double(A(i, k)) + "," + (nz ? "1" : "0") + "\n";
                    rows.push_back({{"kind", kind}, {"covariate", cov}, {"response", resp},
                                    {"coefficient", A(i, k)}, {"support", nz}});
                    if (nz) text << "  " << kind << " " << cov << " -> " << resp << ": " << io::format_double(A(i, k)) << "\n";
                }
        };
        emit(fit.B[m], "B", doc.names.x, "x");
        emit(fit.C[m], "C", znames ? *znames : empty, "z");
        tables.push_back({{"dataset", m + 1}, {"coefficients", std::move(rows)}});
    }
    std::cout << text.str();
    if (!c.out.empty()) {
        const io::fs::path out(c.out);
        io::atomic_write(out / "coefficients.csv", csv);
        json report{{"format", "intreg-report/1"},
                    {"scale", c.scale},
                    {"hyperparameters", {{"lambda", doc.hp.lambda}, {"gamma", doc.hp.gamma}, {"rho", doc.hp.rho}}},
                    {"iterations", doc.iterations},
                    {"converged", doc.converged},
                    {"kkt_residual", doc.kkt_residual},
                    {"consensus_gap", doc.consensus_gap},
                    {"objective", doc.objective},
                    {"active_groups", fit.active_groups()},
                    {"homogeneous", fit.homogeneous()},
                    {"datasets", std::move(tables)}};
        io::atomic_write(out / "report.json", dump(report));
    }
    return ok;
}

void report_error(const char* kind, const std::string& message, int code) {
    std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
}

}  // namespace

selection::GridSpec parse_grid_spec(const std::string& spec) {
    selection::GridSpec g;
    if (spec.rfind("auto", 0) == 0) {
        const auto parts = split(spec, ':');
        if (parts.empty() || parts[0] != "auto" || parts.size() > 3)
            throw UsageError("grid spec '" + spec + "' should be auto[:N[:RATIO]]");
        if (parts.size() >= 2) {
            const double n = to_double(parts[1], "grid size");
            if (n < 1 || n != static_cast<int>(n)) throw UsageError("grid size must be a positive integer");
            g.count = static_cast<int>(n);
        }
        if (parts.size() == 3) g.ratio = to_double(parts[2], "grid ratio");
        if (!(g.ratio > 0.0 && g.ratio <= 1.0)) throw UsageError("grid ratio must lie in (0, 1]");
        return g;
    }
    const auto semi = spec.find(';');
    if (semi == std::string::npos)
        throw UsageError("grid spec '" + spec + "' should be 'auto[:N[:RATIO]]' or 'l1,l2,...;g1,g2,...'");
    std::vector<double> lambdas, gammas;
    for (const auto& s : split(spec.substr(0, semi), ',')) lambdas.push_back(to_double(s, "lambda"));
    for (const auto& s : split(spec.substr(semi + 1), ',')) gammas.push_back(to_double(s, "gamma"));
    try {
        g.grid = selection::CvGrid::make(std::move(lambdas), std::move(gammas));
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    return g;
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, const char* const* argv) {
    CLI::App app{"Integrative sparse multivariate regression (group lasso + lasso via ADMM)"};
    app.require_subcommand(1);

    Flags fit_flags, cv_flags, sim_flags, report_flags;

    auto* fit = app.add_subcommand("fit", "Fit at a single (lambda, gamma)");
    add_common(*fit, fit_flags);
    add_data(*fit, fit_flags);
    fit_flags.add(*fit, "--lambda", &RunConfig::lambda, "Group-lasso weight on shared covariates");
    fit_flags.add(*fit, "--gamma", &RunConfig::gamma, "Lasso weight on dataset-specific covariates");

    auto* cv = app.add_subcommand("cv", "K-fold cross-validation over a (lambda, gamma) grid");
    add_common(*cv, cv_flags);
    add_data(*cv, cv_flags);
    cv_flags.add(*cv, "--k", &RunConfig::k, "Number of folds");
    cv_flags.add(*cv, "--grid", &RunConfig::grid, "auto[:N[:RATIO]] or 'l1,l2;g1,g2'");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo study over simulation scenarios");
    add_common(*simulate, sim_flags);
    sim_flags.add(*simulate, "--scenario", &RunConfig::scenarios, "Scenario name such as M2_n15_s5_rx01_ry01, or 'paper'");
    sim_flags.add(*simulate, "--replicates", &RunConfig::replicates, "Replicates per scenario");
    sim_flags.add(*simulate, "--n-test", &RunConfig::n_test, "Held-out rows per dataset for MSE");
    sim_flags.add(*simulate, "--fixed-design", &RunConfig::fixed_design, "Reuse replicate 1's training designs");
    sim_flags.add(*simulate, "--methods", &RunConfig::methods, "Comma list from MR,UR,lasso,mlasso");
    sim_flags.add(*simulate, "--metric-mode", &RunConfig::metric_mode, "FPR/FNR normalization: paper or conventional");
    sim_flags.add(*simulate, "--k", &RunConfig::k, "Number of CV folds");
    sim_flags.add(*simulate, "--grid", &RunConfig::grid, "auto[:N[:RATIO]] or 'l1,l2;g1,g2'");
    sim_flags.add(*simulate, "--tol", &RunConfig::tol, "Convergence threshold");
    sim_flags.add(*simulate, "--max-iter", &RunConfig::max_iter, "Maximum ADMM iterations");

    auto* report = app.add_subcommand("report", "Coefficient tables and diagnostics for a fitted model");
    report->add_option("--config", report_flags.config, "JSON file mirroring the command-line flags");
    report_flags.add(*report, "--model", &RunConfig::model, "model.json written by fit or cv");
    report_flags.add(*report, "--scale", &RunConfig::scale, "original or standardized");
    report_flags.add(*report, "--out", &RunConfig::out, "Directory for coefficients.csv and report.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("usage_error", e.what(), usage_error);
        return usage_error;
    }

    try {
        if (*fit) return cmd_fit(fit_flags.resolve());
        if (*cv) return cmd_cv(cv_flags.resolve());
        if (*simulate) return cmd_simulate(sim_flags.resolve());
        if (*report) {
            RunConfig c = report_flags.resolve();
            if (report->get_option("--out")->count() == 0 && report_flags.config.empty()) c.out.clear();
            return cmd_report(c);
        }
    } catch (const UsageError& e) {
        report_error(e.kind(), e.what(), usage_error);
        return usage_error;
    } catch (const Error& e) {
        report_error(e.kind(), e.what(), runtime_failure);
        return runtime_failure;
    } catch (const std::exception& e) {
        report_error("runtime_failure", e.what(), runtime_failure);
        return runtime_failure;
    }
    return usage_error;
}

}  // namespace intreg::cli
