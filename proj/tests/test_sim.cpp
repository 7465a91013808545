#include "support.hpp"

#include "intreg/sim.hpp"

#include <doctest.h>

#include <set>

using namespace intreg;
using namespace intreg::sim;

TEST_CASE("true coefficients") {
    const auto t2 = truth(2, 5);
    CHECK(t2.B_star.rows() == 15);
    CHECK(t2.B_star(0, 0) == 1.0);
    CHECK(t2.B_star(5, 1) == 0.5);
    CHECK(t2.B_star(4, 1) == 0.0);
    CHECK(t2.C_star[1](0, 1) == 1.0);
    CHECK(t2.C_star[1](5, 0) == 0.5);
    CHECK(t2.C_star[0] == t2.B_star);
    CHECK(t2.B_star.bottomRows(5).cwiseAbs().maxCoeff() == 0.0);

    const auto t3 = truth(3, 50);
    CHECK(t3.C_star.size() == 3);
    CHECK(t3.C_star[2].rows() == 60);
    CHECK(t3.C_star[2](3, 0) == 1.0);
    CHECK(t3.C_star[2](7, 0) == 0.5);
    CHECK(t3.C_star[2](0, 1) == 1.0);
    CHECK(t3.C_star[2](9, 1) == 0.0);
    CHECK(t3.C_star[2].bottomRows(50).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(truth(4, 5), UnsupportedScenarioError);
}

TEST_CASE("AR(1) rows") {
    std::mt19937_64 rng(1);
    const Index n = 100000;

    SUBCASE("independent columns") {
        const Matrix X = gen_ar1_rows(n, 4, 0.0, rng);
        const Matrix S = (X.transpose() * X) / static_cast<double>(n);
        for (Index i = 0; i < 4; ++i)
            for (Index j = 0; j < 4; ++j)
                if (i != j) CHECK(std::abs(S(i, j)) <= 0.02);
    }
    SUBCASE("lag-one correlation") {
        const Matrix X = gen_ar1_rows(n, 5, 0.9, rng);
        const Matrix S = (X.transpose() * X) / static_cast<double>(n);
        for (Index i = 0; i + 1 < 5; ++i) CHECK(std::abs(S(i, i + 1) / std::sqrt(S(i, i) * S(i + 1, i + 1)) - 0.9) <= 0.01);
        CHECK(std::abs(S(0, 2) - 0.81) <= 0.02);
    }
    SUBCASE("one column is standard normal") {
        const Matrix X = gen_ar1_rows(n, 1, 0.7, rng);
        CHECK(std::abs(X.mean()) <= 0.02);
        CHECK(std::abs(X.squaredNorm() / static_cast<double>(n) - 1.0) <= 0.02);
    }
}

TEST_CASE("generated data") {
    SimConfig cfg;
    cfg.n = 40;
    cfg.s = 5;
    cfg.n_test = 50;
    const auto a = generate(cfg, 3);
    const auto b = generate(cfg, 3);
    const auto c = generate(cfg, 4);
    CHECK(a.train.size() == 2);
    for (std::size_t m = 0; m < 2; ++m) {
        const auto& blk = a.train.block(m);
        CHECK(blk.X.rows() == 40);
        CHECK(blk.X.cols() == 15);
        CHECK(blk.Z.cols() == 15);
        CHECK(blk.Y.cols() == 2);
        CHECK(a.test[m].Y.rows() == 50);
        CHECK(blk.Y == b.train.block(m).Y);
        CHECK(blk.X == b.train.block(m).X);
        CHECK(blk.Y != c.train.block(m).Y);
    }

    cfg.fixed_design = true;
    const auto f1 = generate(cfg, 1), f2 = generate(cfg, 2);
    CHECK(f1.train.block(0).X == f2.train.block(0).X);
    CHECK(f1.train.block(0).Y != f2.train.block(0).Y);
}

TEST_CASE("large samples recover the truth without penalties") {
    SimConfig cfg;
    cfg.n = 5000;
    cfg.rho_y = 0.0;
    cfg.n_test = 10;
    const auto d = generate(cfg, 0);
    admm::SolverOptions opts;
    opts.tol = 1e-12;
    const auto r = admm::fit(d.train, {0.0, 0.0, 1.0}, opts);
    for (std::size_t m = 0; m < 2; ++m) {
        CHECK((r.fit.B[m] - d.truth.B_star).cwiseAbs().maxCoeff() <= 0.05);
        CHECK((r.fit.C[m] - d.truth.C_star[m]).cwiseAbs().maxCoeff() <= 0.05);
    }
}

TEST_CASE("prediction error") {
    SimConfig cfg;
    cfg.rho_y = 0.0;
    cfg.n_test = 1000;
    const auto d = generate(cfg, 1);
    const auto oracle = oracle_fit(d.truth);
    const Matrix e = mse(oracle, d.test);
    CHECK(e.rows() == 2);
    CHECK(e.cols() == 2);
    CHECK((e.array() - 1.0).abs().maxCoeff() <= 0.1);

    ModelFit shifted = oracle;
    for (auto& a : shifted.alpha) a.array() += 0.3;
    const Matrix e2 = mse(shifted, d.test);
    // Mean residual shifts the error by c^2 - 2 c mean(residual).
    for (std::size_t m = 0; m < 2; ++m)
        for (Index k = 0; k < 2; ++k) {
            const Matrix R = residual_matrix(d.test[m], oracle.alpha[m], oracle.B[m], oracle.C[m]);
            const double mean_r = R.col(k).mean();
            CHECK(e2(m, k) == doctest::Approx(e(m, k) + 0.09 - 0.6 * mean_r).epsilon(1e-10));
        }

    std::vector<DatasetBlock> zero = d.test;
    for (auto& b : zero) b.Y.setZero();
    CHECK(mse(ModelFit::zeros(IntegratedDataset(zero)), zero).maxCoeff() == 0.0);
}

TEST_CASE("false positive and negative rates") {
    // Stacked vector: vec B^1, vec B^2 (20 each), vec C^1, vec C^2 (30 each).
    // Ten nonzeros in B_star count twice; with twenty in C^1 that is 40 of 100.
    TruthSet t;
    t.B_star = Matrix::Zero(10, 2);
    t.B_star.topRows(5).setOnes();
    t.C_star = {Matrix::Zero(15, 2), Matrix::Zero(15, 2)};
    t.C_star[0].topRows(10).setOnes();

    auto fill = [&](double v) {
        return ModelFit::from_coefficients({Vector::Zero(2), Vector::Zero(2)}, {Matrix::Constant(10, 2, v), Matrix::Constant(10, 2, v)},
                                           {Matrix::Constant(15, 2, v), Matrix::Constant(15, 2, v)});
    };
    const auto perfect = oracle_fit(t);
    for (auto mode : {MetricMode::paper, MetricMode::conventional}) {
        const auto r = fpr_fnr(perfect, t, mode);
        CHECK(r.fpr == 0.0);
        CHECK(r.fnr == 0.0);
    }
    const auto all = fill(1.0);
    CHECK(fpr_fnr(all, t, MetricMode::conventional).fpr == 1.0);
    CHECK(fpr_fnr(all, t, MetricMode::conventional).fnr == 0.0);
    CHECK(fpr_fnr(all, t, MetricMode::paper).fpr == doctest::Approx(1.5));
    const auto none = fill(0.0);
    CHECK(fpr_fnr(none, t, MetricMode::conventional).fnr == 1.0);
    CHECK(fpr_fnr(none, t, MetricMode::paper).fnr == doctest::Approx(40.0 / 60.0));

    TruthSet empty{Matrix::Zero(10, 2), {Matrix::Zero(15, 2), Matrix::Zero(15, 2)}};
    CHECK_THROWS_AS(fpr_fnr(all, empty, MetricMode::paper), UndefinedMetricError);
    CHECK_THROWS_AS(fpr_fnr(all, empty, MetricMode::conventional), UndefinedMetricError);

    CHECK(parse_metric_mode("conventional") == MetricMode::conventional);
    CHECK_THROWS_AS(parse_metric_mode("other"), ValidationError);
}

TEST_CASE("scenario names") {
    const auto c = SimConfig::from_name("M3_n25_s50_rx09_ry01");
    CHECK(c.M == 3);
    CHECK(c.n == 25);
    CHECK(c.s == 50);
    CHECK(c.rho_x == doctest::Approx(0.9));
    CHECK(c.rho_y == doctest::Approx(0.1));
    CHECK(c.name() == "M3_n25_s50_rx09_ry01");
    CHECK_THROWS(SimConfig::from_name("M4_n25_s50_rx09_ry01"));
    CHECK_THROWS(SimConfig::from_name("bogus"));

    const auto all = paper_scenarios();
    CHECK(all.size() == 64);
    std::set<std::string> names;
    for (const auto& s : all) names.insert(s.name());
    CHECK(names.size() == 64);
}

TEST_CASE("quartiles") {
    const auto q = quartiles({4, 1, 3, 2, 5});
    CHECK(q.q1 == 2.0);
    CHECK(q.median == 3.0);
    CHECK(q.q3 == 4.0);
    CHECK(quartiles({1, 2}).median == 1.5);
    CHECK_THROWS(quartiles({}));
}

TEST_CASE("estimators") {
    SimConfig cfg;
    cfg.n = 40;
    cfg.n_test = 100;
    const auto d = generate(cfg, 0);
    MethodOptions opts;
    opts.grid.count = 5;

    SUBCASE("UR on one response equals the joint fit") {
        const auto one = d.train.response_slice(0);
        const auto ur = fit_ur(one, 4, opts);
        REQUIRE(ur.size() == 1);
        const auto direct = selection::select(one, opts.grid.resolve(one), opts.K, 4, opts.select);
        CHECK(ur[0].best_lambda == direct.best_lambda);
        for (std::size_t m = 0; m < 2; ++m)
            CHECK((ur[0].refit.fit.B[m] - direct.refit.fit.B[m]).cwiseAbs().maxCoeff() <= 1e-10);
    }
    SUBCASE("UR on two responses stitches back to full shape") {
        const auto fit = fit_method(Method::UR, d.train, 4, opts);
        CHECK(fit.B[0].cols() == 2);
        CHECK(fit.C[1].rows() == 15);
        CHECK(fit.support_B.cols() == 2);
    }
    SUBCASE("lasso through either penalty path gives the same objective") {
        const DatasetBlock& blk = d.train.block(0);
        const IntegratedDataset as_x({DatasetBlock{blk.Y, blk.X, Matrix(blk.n(), 0)}});
        const IntegratedDataset as_z({DatasetBlock{blk.Y, Matrix(blk.n(), 0), blk.X}});
        admm::SolverOptions tight;
        tight.tol = 1e-12;
        const auto fx = admm::fit(as_x, {0.05, 1.0, 1.0}, tight);
        const auto fz = admm::fit(as_z, {1.0, 0.05, 1.0}, tight);
        CHECK(objective(as_x, fx.fit, {0.05, 1.0, 1.0}) ==
              doctest::Approx(objective(as_z, fz.fit, {1.0, 0.05, 1.0})).epsilon(1e-8));
    }
    SUBCASE("mlasso limits") {
        const DatasetBlock& blk = d.train.block(1);
        const IntegratedDataset single({reroute_to_specific(blk)});
        CHECK(single.p() == 0);
        CHECK(single.block(0).r() == 30);
        admm::SolverOptions tight;
        tight.tol = 1e-13;
        const auto ls = testing::least_squares(single);
        const auto zero = admm::fit(single, {1.0, 0.0, 1.0}, tight);
        CHECK((zero.fit.C[0] - ls.C[0]).cwiseAbs().maxCoeff() <= 1e-5);  // 30 covariates on 40 rows
        const auto huge = admm::fit(single, {1.0, 1e6, 1.0});
        CHECK(huge.fit.C[0].cwiseAbs().maxCoeff() == 0.0);
        const auto split = split_mlasso(zero.fit, 15);
        CHECK(split.B[0].rows() == 15);
        CHECK(split.C[0].rows() == 15);
        CHECK(split.B[0] == zero.fit.C[0].topRows(15));
    }
    SUBCASE("method names") {
        CHECK(parse_method("MR") == Method::MR);
        CHECK(std::string(to_string(Method::mlasso)) == "mlasso");
        CHECK_THROWS_AS(parse_method("mglasso"), ValidationError);
    }
}

TEST_CASE("study runs are reproducible and ordered") {
    auto cfg = SimConfig::from_name("M2_n15_s5_rx01_ry01");
    cfg.replicates = 2;
    cfg.n_test = 100;
    StudyOptions opts;
    opts.method.grid.count = 4;
    const auto a = run_study({cfg}, opts);
    opts.threads = 3;
    const auto b = run_study({cfg}, opts);
    CHECK(a.failures.empty());
    // 4 methods x 2 datasets x 2 responses x 2 replicates.
    CHECK(a.records.size() == 32);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].mse == b.records[i].mse);
        CHECK(a.records[i].fpr == b.records[i].fpr);
        CHECK(a.records[i].method == b.records[i].method);
    }
    for (const auto& o : a.overall)
        if (o.method == Method::MR) CHECK(o.homogeneous);
    CHECK(a.summary.size() == 16);
}

TEST_CASE("wide scenario runs to completion") {
    auto cfg = SimConfig::from_name("M2_n15_s50_rx01_ry01");
    cfg.replicates = 1;
    cfg.n_test = 100;
    StudyOptions opts;
    opts.method.grid.count = 4;
    const auto r = run_study({cfg}, opts);
    CHECK(r.failures.empty());
    CHECK(r.records.size() == 16);
}

TEST_CASE("per-dataset lasso supports are not forced to agree") {
    auto cfg = SimConfig::from_name("M2_n15_s5_rx09_ry01");
    cfg.replicates = 6;
    cfg.n_test = 100;
    StudyOptions opts;
    opts.methods = {Method::lasso};
    opts.method.grid.count = 6;
    const auto r = run_study({cfg}, opts);
    int differ = 0;
    for (const auto& o : r.overall) differ += !o.homogeneous;
    CHECK(2 * differ >= static_cast<int>(r.overall.size()));
}
