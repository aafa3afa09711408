#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fgt2m/diffusion.hpp"

#include <cmath>

using namespace fgt2m;

TEST_CASE("q_sample closed-form limits") {
    const auto sched = make_linear_schedule(100, 1e-3, 0.05);
    Rng rng(5);
    const Mat x0 = rng.normal_mat(6, 4);

    SUBCASE("zero noise keeps the scaled signal") {
        const Mat out = q_sample(x0, 42, Mat::Zero(6, 4), sched);
        CHECK((out - std::sqrt(sched.alpha_bar(42)) * x0).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("zero signal keeps the scaled noise") {
        const Mat eps = rng.normal_mat(6, 4);
        const Mat out = q_sample(Mat::Zero(6, 4), 42, eps, sched);
        CHECK((out - std::sqrt(1.0 - sched.alpha_bar(42)) * eps).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("bad arguments") {
        CHECK_THROWS_AS(q_sample(x0, 0, Mat::Zero(6, 4), sched), IndexError);
        CHECK_THROWS_AS(q_sample(x0, 101, Mat::Zero(6, 4), sched), IndexError);
        CHECK_THROWS_AS(q_sample(x0, 3, Mat::Zero(5, 4), sched), ContractError);
    }
}

TEST_CASE("forward-process Monte-Carlo moments at t=500") {
    const auto sched = make_linear_schedule(1000, 1e-4, 0.02);
    const int t = 500, draws = 10000;
    const int dims = 16;
    Rng init(98);
    const Mat x0 = init.normal_mat(1, dims);
    Rng rng(99);

    Mat sum = Mat::Zero(1, dims), sumsq = Mat::Zero(1, dims);
    for (int k = 0; k < draws; ++k) {
        const Mat xt = q_sample(x0, t, rng.normal_mat(1, dims), sched);
        sum += xt;
        sumsq += xt.cwiseProduct(xt);
    }
    const Mat mean = sum / draws;
    const Mat var = sumsq / draws - mean.cwiseProduct(mean);

    const double abar = sched.alpha_bar(t);
    const double expect_var = 1.0 - abar;
    const double se_mean = std::sqrt(expect_var / draws); // exact std of the mean
    for (int j = 0; j < dims; ++j)
        CHECK(std::abs(mean(0, j) - std::sqrt(abar) * x0(0, j)) < 3.0 * se_mean);
    // per-element variance estimates carry ~1.4% noise at 1e4 draws; the 2%
    // band applies to the pooled estimate
    CHECK(std::abs(var.mean() - expect_var) / expect_var < 0.02);
}

TEST_CASE("training loss trivial denoisers") {
    const auto sched = make_linear_schedule(50, 1e-3, 0.04);
    Rng rng(2);
    const Mat x0 = rng.normal_mat(5, 3);
    const Mat eps = rng.normal_mat(5, 3);

    const DenoiserFn identity_oracle = [&](const Mat&, int) { return x0; };
    CHECK(training_loss(identity_oracle, x0, 17, eps, sched) == doctest::Approx(0.0));

    const DenoiserFn zero = [](const Mat& x, int) { return Mat::Zero(x.rows(), x.cols()).eval(); };
    CHECK(training_loss(zero, x0, 17, eps, sched) ==
          doctest::Approx(x0.array().square().mean()).epsilon(1e-12));

    const DenoiserFn bad_shape = [](const Mat&, int) { return Mat::Zero(2, 2).eval(); };
    CHECK_THROWS_AS(training_loss(bad_shape, x0, 17, eps, sched), ContractError);
}

TEST_CASE("posterior step matches the hand-computed scalar oracle") {
    // schedule (T=2, beta 0.1..0.2): hand-computed oracle values
    //   β̃₂ = 0.2·(1−0.9)/(1−0.72) = 0.071428571428571438
    //   μ₂(x̂₀=0.7, x₂=0.5) = 0.63406079027524198
    const auto sched = make_linear_schedule(2, 0.1, 0.2);
    CHECK(sched.posterior_variance(2) == doctest::Approx(0.071428571428571438).epsilon(1e-15));

    Mat x0_hat(1, 1), x_t(1, 1);
    x0_hat << 0.7;
    x_t << 0.5;
    CHECK(posterior_mean(x0_hat, x_t, 2, sched)(0, 0) ==
          doctest::Approx(0.63406079027524198).epsilon(1e-15));

    const DenoiserFn oracle = [&](const Mat&, int) { return x0_hat; };
    Rng rng(1);
    const Mat stepped = p_sample_step(oracle, x_t, 2, sched, rng);
    // draw reproduced out-of-band: same seed, same consumption order
    Rng rng2(1);
    const double z = rng2.normal();
    CHECK(stepped(0, 0) ==
          doctest::Approx(0.63406079027524198 + std::sqrt(0.071428571428571438) * z).epsilon(1e-12));
}

TEST_CASE("final step adds no noise") {
    const auto sched = make_linear_schedule(2, 0.1, 0.2);
    Mat x0_hat(1, 2), x_t(1, 2);
    x0_hat << 0.3, -0.9;
    x_t << 1.0, 1.0;
    const DenoiserFn oracle = [&](const Mat&, int) { return x0_hat; };
    Rng rng(123);
    const Mat out = p_sample_step(oracle, x_t, 1, sched, rng);
    // μ₁ = x̂₀ exactly: √ᾱ₀·β₁/(1−ᾱ₁) = 1 and the x_t coefficient vanishes
    CHECK((out - x0_hat).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("p_sample_step determinism under a fixed seed") {
    const auto sched = make_linear_schedule(30, 1e-3, 0.09);
    const DenoiserFn half = [](const Mat& x, int) { return (0.5 * x).eval(); };
    Rng a(42), b(42);
    const Mat x = Rng(9).normal_mat(4, 2);
    const Mat out1 = p_sample_step(half, x, 12, sched, a);
    const Mat out2 = p_sample_step(half, x, 12, sched, b);
    CHECK((out1 - out2).cwiseAbs().maxCoeff() == 0.0); // bitwise
}

TEST_CASE("sample_loop contracts") {
    const auto sched = make_linear_schedule(25, 1e-3, 0.08);

    SUBCASE("single-step loop collapses to the constant's posterior mean") {
        const auto one = make_linear_schedule(1, 0.3, 0.3);
        Mat c(1, 1);
        c << 0.77;
        const DenoiserFn constant = [&](const Mat& x, int) {
            return Mat::Constant(x.rows(), x.cols(), c(0, 0)).eval();
        };
        Rng rng(5);
        const Mat out = sample_loop(constant, 3, 2, one, rng);
        CHECK(out.rows() == 3);
        CHECK(out.cols() == 2);
        // t=1: μ₁ = x̂₀ exactly, regardless of the x_T draw
        CHECK((out.array() - 0.77).abs().maxCoeff() < 1e-12);
    }

    SUBCASE("shape contract and bitwise determinism") {
        const DenoiserFn half = [](const Mat& x, int) { return (0.5 * x).eval(); };
        Rng a(7), b(7);
        const Mat m1 = sample_loop(half, 9, 4, sched, a);
        const Mat m2 = sample_loop(half, 9, 4, sched, b);
        CHECK(m1.rows() == 9);
        CHECK(m1.cols() == 4);
        CHECK((m1 - m2).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("numeric divergence names the step") {
        const DenoiserFn exploding = [](const Mat& x, int) {
            return (x * std::numeric_limits<double>::infinity()).eval();
        };
        Rng rng(3);
        try {
            sample_loop(exploding, 2, 2, sched, rng);
            FAIL("expected NumericError");
        } catch (const NumericError& e) {
            CHECK(std::string(e.what()).find("step 25") != std::string::npos);
        }
    }
}

TEST_CASE("perfect denoiser fixed point on one-step chains") {
    // With β̃ forced to zero (final step) and x̂₀ = x₀, stepping reconstructs
    // the posterior-mean trajectory exactly.
    const auto one = make_linear_schedule(1, 0.2, 0.2);
    Rng rng(8);
    const Mat x0 = rng.normal_mat(4, 3);
    const DenoiserFn oracle = [&](const Mat&, int) { return x0; };
    const Mat x1 = q_sample(x0, 1, rng.normal_mat(4, 3), one);
    Rng step_rng(1);
    const Mat rec = p_sample_step(oracle, x1, 1, one, step_rng);
    CHECK((rec - x0).cwiseAbs().maxCoeff() < 1e-12);
}
