#include <cmath>

#include <gtest/gtest.h>

#include "amprt/gmm_retrain.hpp"

using namespace amprt;

namespace {

GmmParams high_noise() { return GmmParams::make(1.5, 0.8, 0.4, 0.3, 1000); }

std::vector<AggregatorGmm> all_aggregators() {
    const GmmParams q = GmmParams::make(1.5, 2.0, 0.2, 0.3, 100);
    return {Identity{}, OptimalGmm{0.7, q, 1.0}, OptimalGmm{0.0, q, 0.6}, SmoothedFullRT{3.0}, SmoothedConsensusRT{5.0}};
}

// Straight-line transcription of the two update formulas with explicit loops.
void reference_step(const Eigen::MatrixXd& X, const Eigen::VectorXd& yhat, const AggregatorGmm& agg,
                    std::vector<double>& theta, std::vector<double>& y) {
    const int n = static_cast<int>(X.rows()), d = static_cast<int>(X.cols());
    std::vector<double> g(n);
    double c = 0.0;
    for (int i = 0; i < n; ++i) {
        g[i] = eval_aggregator(agg, y[i], yhat[i]);
        c += eval_aggregator_deriv(agg, y[i], yhat[i]);
    }
    c /= n;
    std::vector<double> th(d);
    for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += X(i, j) * g[i];
        th[j] = s / std::sqrt(static_cast<double>(n)) - c * theta[j];
    }
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += X(i, j) * th[j];
        y[i] = s / std::sqrt(static_cast<double>(n)) - g[i] * d / static_cast<double>(n);
    }
    theta = th;
}

}  // namespace

TEST(GmmParams, Validation) {
    EXPECT_THROW(GmmParams::make(1.5, 0.8, 0.5, 0.3, 10), ConfigError);
    EXPECT_THROW(GmmParams::make(1.5, 0.8, -0.1, 0.3, 10), ConfigError);
    EXPECT_THROW(GmmParams::make(1.5, 0.8, 0.1, 1.0, 10), ConfigError);
    EXPECT_THROW(GmmParams::make(0.0, 0.8, 0.1, 0.3, 10), ConfigError);
    const GmmParams q = high_noise();
    EXPECT_EQ(q.d, 800);
    EXPECT_LE(std::abs(static_cast<double>(q.d) / q.n - q.alpha), 1.0 / q.n);
}

TEST(SampleGmmDataset, NoFlipsWhenPIsZero) {
    const GmmDataset ds = sample_gmm_dataset(GmmParams::make(1.0, 0.5, 0.0, 0.5, 200), RngStream(1, 0));
    EXPECT_EQ(ds.y_noisy, ds.y_true);
}

TEST(SampleGmmDataset, AllPositiveWhenPiPlusIsOne) {
    GmmParams q = GmmParams::make(1.0, 0.5, 0.1, 0.5, 200);
    q.pi_plus = std::nextafter(1.0, 0.0);  // the open interval excludes 1 itself
    const GmmDataset ds = sample_gmm_dataset(q, RngStream(1, 0));
    EXPECT_TRUE((ds.y_true.array() == 1.0).all());
}

TEST(SampleGmmDataset, NormAndStatistics) {
    const GmmParams q = high_noise();
    const GmmDataset ds = sample_gmm_dataset(q, RngStream(5, 0));
    EXPECT_NEAR(ds.mu.norm(), 1.5, 1e-12);
    EXPECT_EQ(ds.X.rows(), 1000);
    EXPECT_EQ(ds.X.cols(), 800);
    const double plus = (ds.y_true.array() > 0).count() / 1000.0;
    EXPECT_LE(std::abs(plus - 0.3), 4 * std::sqrt(0.3 * 0.7 / 1000));
    const double flips = (ds.y_true.array() != ds.y_noisy.array()).count() / 1000.0;
    EXPECT_LE(std::abs(flips - 0.4), 4 * std::sqrt(0.4 * 0.6 / 1000));
    // rows are y_i mu + z_i: the residual has unit variance per entry
    const Eigen::MatrixXd Z = ds.X - ds.y_true * ds.mu.transpose();
    EXPECT_NEAR(Z.squaredNorm() / Z.size(), 1.0, 0.01);
}

TEST(SampleGmmDataset, Deterministic) {
    const GmmParams q = GmmParams::make(1.0, 0.5, 0.2, 0.5, 50);
    const GmmDataset a = sample_gmm_dataset(q, RngStream(9, 2)), b = sample_gmm_dataset(q, RngStream(9, 2));
    EXPECT_EQ(a.X, b.X);
    EXPECT_EQ(a.y_noisy, b.y_noisy);
    const GmmDataset c = sample_gmm_dataset(q, RngStream(9, 3));
    EXPECT_NE(a.X, c.X);
    EXPECT_THROW(sample_gmm_dataset(GmmParams::make(1.0, 0.5, 0.2, 0.5, 0), RngStream(1, 0)), ConfigError);
}

TEST(EvalAggregator, Examples) {
    const GmmParams q = GmmParams::make(1.5, 2.0, 0.3, 0.5, 10);
    EXPECT_NEAR(eval_aggregator(OptimalGmm{0.8, q, 1.0}, 0.0, 1.0), 0.4, 1e-15);
    EXPECT_EQ(eval_aggregator(SmoothedFullRT{4.0}, 0.0, -1.0), 0.0);
    EXPECT_EQ(eval_aggregator(OptimalGmm{0.8, q, 1.0}, 1e6, -1.0), 1.0);
    EXPECT_EQ(eval_aggregator(OptimalGmm{0.8, q, 1.0}, -1e6, 1.0), -1.0);
    EXPECT_EQ(eval_aggregator(Identity{}, 3.0, -1.0), -1.0);
    EXPECT_NEAR(eval_aggregator(SmoothedConsensusRT{2.0}, 0.0, -1.0), -0.5, 1e-15);
    EXPECT_THROW(eval_aggregator(Identity{}, std::nan(""), 1.0), DomainError);
}

TEST(EvalAggregator, OptimalMatchesRatioForm) {
    // 2 / (1 + exp(-E)) - 1 with E the full exponent.
    const GmmParams q = GmmParams::make(1.2, 0.7, 0.15, 0.35, 10);
    const double eta = 0.9;
    for (double y = -3.0; y <= 3.0; y += 0.25)
        for (double yh : {-1.0, 1.0}) {
            const double e = yh * std::log(0.85 / 0.15) + 2 * 1.44 * y / (0.7 * (eta * eta + 1)) + std::log(0.35 / 0.65);
            EXPECT_NEAR(eval_aggregator(OptimalGmm{eta, q, 1.0}, y, yh), 2.0 / (1.0 + std::exp(-e)) - 1.0, 1e-14);
        }
}

TEST(EvalAggregator, OptimalBoundedAndIncreasing) {
    const GmmParams q = GmmParams::make(1.5, 0.8, 0.4, 0.3, 10);
    for (double eta : {0.0, 0.5, 3.0})
        for (double yh : {-1.0, 1.0}) {
            double prev = -2.0;
            for (double y = -20.0; y <= 20.0; y += 0.1) {
                const double g = eval_aggregator(OptimalGmm{eta, q, 1.0}, y, yh);
                EXPECT_GE(g, -1.0);
                EXPECT_LE(g, 1.0);
                if (std::abs(y) < 5) {  // tanh saturates to +-1 in double further out
                    EXPECT_LT(g, 1.0);
                    EXPECT_GT(g, -1.0);
                    EXPECT_GT(g, prev);
                }
                prev = g;
            }
        }
}

TEST(EvalAggregator, PZeroReturnsLabel) {
    const GmmParams q = GmmParams::make(1.5, 0.8, 0.0, 0.3, 10);
    EXPECT_EQ(eval_aggregator(OptimalGmm{0.5, q, 1.0}, -7.0, 1.0), 1.0);
    EXPECT_EQ(eval_aggregator(OptimalGmm{0.5, q, 1.0}, 7.0, -1.0), -1.0);
}

TEST(EvalAggregatorDeriv, Examples) {
    EXPECT_EQ(eval_aggregator_deriv(Identity{}, 0.3, 1.0), 0.0);
    EXPECT_EQ(eval_aggregator_deriv(Identity{}, -2.0, -1.0), 0.0);
    EXPECT_NEAR(eval_aggregator_deriv(SmoothedFullRT{6.0}, 0.0, 1.0), 3.0, 1e-15);
}

TEST(EvalAggregatorDeriv, MatchesFiniteDifferences) {
    const double h = 1e-5;
    for (const auto& agg : all_aggregators())
        for (int k = 0; k < 100; ++k) {
            const double y = -3.0 + 6.0 * k / 99.0;
            for (double yh : {-1.0, 1.0}) {
                const double fd = (eval_aggregator(agg, y + h, yh) - eval_aggregator(agg, y - h, yh)) / (2 * h);
                EXPECT_NEAR(eval_aggregator_deriv(agg, y, yh), fd, 1e-6) << aggregator_name(agg) << " y=" << y;
            }
        }
}

TEST(OnsagerCoefficient, Examples) {
    Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(7, -1, 1), yh = Eigen::VectorXd::Ones(7);
    EXPECT_EQ(onsager_coefficient(Identity{}, y, yh), 0.0);
    EXPECT_NEAR(onsager_coefficient(SmoothedFullRT{2.5}, Eigen::VectorXd::Zero(7), yh), 1.25, 1e-15);
    Eigen::VectorXd one(1), lab(1);
    one << 0.37;
    lab << -1.0;
    const AggregatorGmm ct = SmoothedConsensusRT{3.0};
    EXPECT_EQ(onsager_coefficient(ct, one, lab), eval_aggregator_deriv(ct, 0.37, -1.0));
    EXPECT_THROW(onsager_coefficient(Identity{}, y, Eigen::VectorXd::Ones(6)), ShapeError);
}

TEST(AmpStepGmm, FirstStepIsScaledCorrelation) {
    const GmmDataset ds = sample_gmm_dataset(GmmParams::make(1.5, 0.8, 0.3, 0.4, 120), RngStream(3, 0));
    double c = -1.0;
    const AmpStateGmm s1 = amp_step_gmm(amp_init_gmm(ds), ds, Identity{}, &c);
    EXPECT_EQ(c, 0.0);
    const Eigen::VectorXd expect = (1.0 / std::sqrt(120.0)) * (ds.X.transpose() * ds.y_noisy);
    EXPECT_EQ(s1.theta, expect);
    EXPECT_EQ(s1.t, 1);
}

TEST(AmpStepGmm, ZeroMatrix) {
    GmmDataset ds = sample_gmm_dataset(GmmParams::make(1.0, 0.5, 0.2, 0.5, 40), RngStream(4, 0));
    ds.X.setZero();
    AmpStateGmm s;
    s.theta = Eigen::VectorXd::LinSpaced(20, -1, 1);
    s.y_soft = Eigen::VectorXd::LinSpaced(40, -2, 2);
    s.t = 3;
    const AggregatorGmm agg = SmoothedFullRT{2.0};
    const double c = onsager_coefficient(agg, s.y_soft, ds.y_noisy);
    const AmpStateGmm next = amp_step_gmm(s, ds, agg);
    EXPECT_TRUE(next.theta.isApprox(-c * s.theta, 1e-15));
    for (int i = 0; i < 40; ++i) EXPECT_NEAR(next.y_soft[i], -eval_aggregator(agg, s.y_soft[i], ds.y_noisy[i]) * 0.5, 1e-15);
    EXPECT_EQ(next.t, 4);
}

TEST(AmpStepGmm, MatchesStraightLineImplementation) {
    const GmmParams q = GmmParams::make(1.5, 0.8, 0.3, 0.4, 50);
    const GmmDataset ds = sample_gmm_dataset(q, RngStream(17, 0));
    ASSERT_EQ(ds.X.cols(), 40);
    std::vector<double> theta(40, 0.0), y(50, 0.0);
    AmpStateGmm s = amp_init_gmm(ds);
    const std::vector<AggregatorGmm> seq{Identity{}, OptimalGmm{0.6, q, 0.9}, SmoothedFullRT{2.0},
                                         SmoothedConsensusRT{3.0}, OptimalGmm{1.1, q, 1.2}};
    for (const auto& agg : seq) {
        reference_step(ds.X, ds.y_noisy, agg, theta, y);
        s = amp_step_gmm(s, ds, agg);
        for (int j = 0; j < 40; ++j) EXPECT_NEAR(s.theta[j], theta[j], 1e-12);
        for (int i = 0; i < 50; ++i) EXPECT_NEAR(s.y_soft[i], y[i], 1e-12);
    }
}

TEST(AmpStepGmm, DimensionMismatch) {
    const GmmDataset ds = sample_gmm_dataset(GmmParams::make(1.0, 0.5, 0.2, 0.5, 40), RngStream(4, 0));
    AmpStateGmm s = amp_init_gmm(ds);
    s.theta.resize(3);
    EXPECT_THROW(amp_step_gmm(s, ds, Identity{}), ShapeError);
}

TEST(AmpStepGmm, NonFiniteDiverges) {
    const GmmDataset ds = sample_gmm_dataset(GmmParams::make(1.0, 0.5, 0.2, 0.5, 40), RngStream(4, 0));
    AmpStateGmm s = amp_init_gmm(ds);
    s.t = 5;
    s.y_soft[3] = INFINITY;
    try {
        amp_step_gmm(s, ds, Identity{});
        FAIL();
    } catch (const DivergenceError& e) {
        EXPECT_EQ(e.iteration(), 5);
    }
}

TEST(TestErrorGmm, Examples) {
    Eigen::VectorXd mu(3);
    mu << 1.0, 0.5, -0.2;
    EXPECT_NEAR(test_error_gmm(mu, mu), normal_cdf(-mu.norm()), 1e-15);
    Eigen::VectorXd perp(3);
    perp << 0.5, -1.0, 0.0;
    EXPECT_NEAR(test_error_gmm(perp, mu), 0.5, 1e-15);
    EXPECT_THROW(test_error_gmm(Eigen::VectorXd::Zero(3), mu), DegenerateModelError);
    // flip symmetry
    const Eigen::VectorXd th = Eigen::VectorXd::LinSpaced(3, 0.2, 0.9);
    EXPECT_NEAR(test_error_gmm(-th, -mu), test_error_gmm(th, mu), 1e-16);
}

TEST(TestErrorGmm, MatchesMonteCarlo) {
    RngStream rng(77, 0);
    const int d = 10;
    Eigen::VectorXd mu(d), th(d);
    for (int j = 0; j < d; ++j) {
        mu[j] = rng.normal();
        th[j] = rng.normal() + mu[j];
    }
    mu.normalize();
    const int N = 1'000'000;
    int wrong = 0;
    Eigen::VectorXd x(d);
    for (int i = 0; i < N; ++i) {
        const double y = rng.bernoulli(0.3) ? 1.0 : -1.0;
        for (int j = 0; j < d; ++j) x[j] = y * mu[j] + rng.normal();
        wrong += (x.dot(th) >= 0 ? 1.0 : -1.0) != y;
    }
    const double pe = test_error_gmm(th, mu), est = static_cast<double>(wrong) / N;
    EXPECT_NEAR(est, pe, 3 * std::sqrt(pe * (1 - pe) / N));
}

TEST(VanillaEstimator, Examples) {
    GmmParams q = GmmParams::make(1.5, 0.01, 0.0, 0.5, 200000);
    ASSERT_EQ(q.d, 2000);
    q.d = 3;
    RngStream rng(8, 0);
    GmmDataset ds = sample_gmm_dataset(q, rng);
    // rotate so that mu = gamma e1
    ds.X = ds.X - ds.y_true * ds.mu.transpose();
    ds.mu = Eigen::Vector3d(1.5, 0.0, 0.0);
    ds.X += ds.y_true * ds.mu.transpose();
    const Eigen::VectorXd th = vanilla_estimator(ds);
    EXPECT_NEAR(th[0], 1.5, 4.0 / std::sqrt(200000.0));
    GmmDataset neg = ds;
    neg.y_noisy = -ds.y_noisy;
    EXPECT_TRUE(vanilla_estimator(neg).isApprox(-th, 1e-15));
    neg.X.setZero();
    EXPECT_EQ(vanilla_estimator(neg), Eigen::VectorXd::Zero(3));
}

TEST(RunRetrainingGmm, SingleStep) {
    const GmmParams q = GmmParams::make(1.5, 0.8, 0.3, 0.4, 200);
    const Trajectory tr = run_retraining_gmm(q, constant_schedule(Identity{}), 1, RngStream(2, 0));
    ASSERT_EQ(tr.points.size(), 1u);
    const GmmDataset ds = sample_gmm_dataset(q, RngStream(2, 0));
    const Eigen::VectorXd th1 = ds.X.transpose() * ds.y_noisy / std::sqrt(200.0);
    EXPECT_NEAR(tr.points[0].test_error, normal_cdf(-ds.mu.dot(th1) / th1.norm()), 1e-14);
    EXPECT_EQ(tr.points[0].t, 1);
    EXPECT_THROW(run_retraining_gmm(q, constant_schedule(Identity{}), 0, RngStream(2, 0)), ConfigError);
}

TEST(RunRetrainingGmm, Deterministic) {
    const GmmParams q = GmmParams::make(1.5, 0.8, 0.3, 0.4, 150);
    const auto sched = constant_schedule(SmoothedFullRT{3.0});
    const Trajectory a = run_retraining_gmm(q, sched, 5, RngStream(6, 1));
    const Trajectory b = run_retraining_gmm(q, sched, 5, RngStream(6, 1));
    ASSERT_EQ(a.points.size(), 5u);
    for (std::size_t k = 0; k < a.points.size(); ++k) {
        EXPECT_EQ(a.points[k].test_error, b.points[k].test_error);
        EXPECT_EQ(a.points[k].model_norm, b.points[k].model_norm);
    }
}

TEST(HardRetraining, StartsFromVanilla) {
    const GmmParams q = GmmParams::make(1.5, 0.8, 0.3, 0.4, 300);
    const GmmDataset ds = sample_gmm_dataset(q, RngStream(1, 0));
    for (auto mode : {HardRetrain::FullRT, HardRetrain::ConsensusRT}) {
        const Trajectory tr = run_hard_retraining_gmm(ds, mode, 4);
        ASSERT_EQ(tr.points.size(), 4u);
        EXPECT_NEAR(tr.points[0].test_error, test_error_gmm(vanilla_estimator(ds), ds.mu), 1e-15);
    }
}
