#include <doctest.h>

#include <cmath>

#include "atd/kernels.hpp"
#include "atd/objective.hpp"
#include "helpers.hpp"
#include "oracle.hpp"

using namespace atd;
using namespace atd::testing;

namespace {

struct Instance {
    DenseTensor t, t_aug;
    Matrix x, x_aug;
    KruskalBases bases;
};

Instance random_instance(std::uint64_t seed, std::size_t n = 6, std::size_t rank = 3) {
    Rng rng(seed);
    Instance inst;
    inst.bases = {random_matrix(rng, 4, rank), random_matrix(rng, 5, rank),
                  random_matrix(rng, 3, rank)};
    inst.x = random_matrix(rng, n, rank);
    inst.x_aug = random_matrix(rng, n, rank);
    inst.t = random_tensor(rng, {n, 4, 5, 3});
    inst.t_aug = random_tensor(rng, {n, 4, 5, 3});
    return inst;
}

} // namespace

TEST_CASE("cpd_loss: exact fit, zero model, random oracle") {
    Instance inst = random_instance(41);
    // Exact rank-R data with matching coefficients fits to zero.
    DenseTensor exact = kruskal_reconstruct(&inst.x, inst.bases.as_list());
    DenseTensor exact_aug = kruskal_reconstruct(&inst.x_aug, inst.bases.as_list());
    CHECK(cpd_loss(exact, exact_aug, inst.x, inst.x_aug, inst.bases) == 0.0);

    // Zero bases and coefficients leave the raw norms.
    KruskalBases zero = {Matrix(4, 3), Matrix(5, 3), Matrix(3, 3)};
    Matrix zx(6, 3), zxa(6, 3);
    CHECK(cpd_loss(inst.t, inst.t_aug, zx, zxa, zero) ==
          doctest::Approx(oracle::naive_frobenius_sq(inst.t) +
                          oracle::naive_frobenius_sq(inst.t_aug))
              .epsilon(1e-13));

    // Random instance against reconstruct-and-subtract.
    DenseTensor recon = kruskal_reconstruct(&inst.x, inst.bases.as_list());
    DenseTensor recon_aug = kruskal_reconstruct(&inst.x_aug, inst.bases.as_list());
    double manual = 0.0;
    for (std::size_t i = 0; i < inst.t.size(); ++i) {
        const double d = inst.t[i] - recon[i];
        const double da = inst.t_aug[i] - recon_aug[i];
        manual += d * d + da * da;
    }
    CHECK(cpd_loss(inst.t, inst.t_aug, inst.x, inst.x_aug, inst.bases) ==
          doctest::Approx(manual).epsilon(1e-10));
}

TEST_CASE("reg_loss cases") {
    KruskalBases eye = {Matrix::identity(2), Matrix::identity(2), Matrix::identity(2)};
    Matrix zero(2, 2);
    CHECK(reg_loss(zero, zero, {Matrix(2, 2), Matrix(2, 2), Matrix(2, 2)}, 0.5) == 0.0);
    CHECK(reg_loss(zero, zero, eye, 0.5) == doctest::Approx(3.0)); // 0.5 * 6 ones

    Instance inst = random_instance(42);
    double manual = 0.0;
    for (const Matrix* m : {&inst.x, &inst.x_aug, &inst.bases.A, &inst.bases.B, &inst.bases.C})
        for (std::size_t i = 0; i < m->size(); ++i) manual += m->data()[i] * m->data()[i];
    CHECK(reg_loss(inst.x, inst.x_aug, inst.bases, 0.7) ==
          doctest::Approx(0.7 * manual).epsilon(1e-12));
    CHECK_THROWS_AS(reg_loss(inst.x, inst.x_aug, inst.bases, 0.0), validation_error);
}

TEST_CASE("apply_g_gamma matches the dense contrast matrix") {
    // N=2, gamma=0 on the identity.
    Matrix eye = Matrix::identity(2);
    Matrix out = apply_g_gamma(eye, 0.0);
    CHECK(out(0, 0) == doctest::Approx(-0.5));
    CHECK(out(0, 1) == doctest::Approx(0.5));
    CHECK(out(1, 0) == doctest::Approx(0.5));
    CHECK(out(1, 1) == doctest::Approx(-0.5));

    // Equal rows collapse to ((gamma+1)/N - 1/N) * u.
    Matrix same(5, 3);
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 3; ++c) same(r, c) = 1.0 + static_cast<double>(c);
    const double gamma = 2.5;
    Matrix collapsed = apply_g_gamma(same, gamma);
    for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(collapsed(r, c) ==
                  doctest::Approx((gamma / 5.0) * same(r, c)).epsilon(1e-12));

    // Streaming equals dense for assorted sizes.
    Rng rng(43);
    for (std::size_t n : {2u, 6u, 17u, 64u}) {
        Matrix y = random_matrix(rng, n, 4);
        Matrix dense = oracle::matmul(oracle::dense_g_matrix(n, 3.0), y);
        CHECK(max_abs_diff(apply_g_gamma(y, 3.0), dense) <= 1e-12);
    }
    CHECK_THROWS_AS(apply_g_gamma(Matrix(1, 3), 0.0), validation_error);
}

TEST_CASE("ss_loss closed cases and trace oracle") {
    // Identical unit rows: the estimator collapses to gamma.
    for (double gamma : {0.0, 1.0, 4.5}) {
        Matrix u(4, 3);
        for (std::size_t r = 0; r < 4; ++r) u(r, 0) = 1.0;
        CHECK(ss_loss(u, u, {gamma, 1.0}) == doctest::Approx(gamma).epsilon(1e-12));
    }

    // Orthogonal cross pairs.
    Matrix x(2, 2);
    x(0, 0) = 1.0;
    x(1, 1) = 1.0;
    CHECK(ss_loss(x, x, {0.0, 1.0}) == doctest::Approx(-1.0).epsilon(1e-12));

    Rng rng(44);
    Matrix a = random_matrix(rng, 8, 3);
    Matrix b = random_matrix(rng, 8, 3);
    CHECK(ss_loss(a, b, {2.0, 1.7}) ==
          doctest::Approx(oracle::dense_ss_loss(a, b, 2.0, 1.7)).epsilon(1e-12));
}

TEST_CASE("ss_loss rejects zero rows in the strict path and clamps in the solver path") {
    Matrix x(2, 2);
    x(0, 0) = 1.0; // second row identically zero
    Matrix y(2, 2);
    y(0, 0) = 1.0;
    y(1, 1) = 1.0;
    CHECK_THROWS_AS(ss_loss(x, y, {0.0, 1.0}), numeric_error);
    std::size_t clamped = 0;
    (void)ss_loss(x, y, {0.0, 1.0}, RowNormPolicy::clamp, &clamped);
    CHECK(clamped == 1);
}

TEST_CASE("ss_loss is invariant to positive row scaling") {
    Rng rng(45);
    Matrix a = random_matrix(rng, 8, 4);
    Matrix b = random_matrix(rng, 8, 4);
    const double base = ss_loss(a, b, {1.5, 2.0});
    Matrix a2 = a, b2 = b;
    for (std::size_t c = 0; c < 4; ++c) {
        a2(3, c) *= 17.0;
        b2(5, c) *= 0.003;
    }
    CHECK(ss_loss(a2, b2, {1.5, 2.0}) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("ss_loss range bound over 1000 fuzz instances") {
    Rng rng(46);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.below(10);
        const std::size_t r = 1 + rng.below(6);
        const double gamma = 5.0 * rng.uniform();
        const double beta = 0.1 + 3.0 * rng.uniform();
        Matrix a = random_matrix(rng, n, r);
        Matrix b = random_matrix(rng, n, r);
        const double v = ss_loss(a, b, {gamma, beta});
        CHECK(std::abs(v) / beta <= gamma + 2.0 + 1e-12);
    }
}

TEST_CASE("total_loss recomposes its terms") {
    Instance inst = random_instance(47);
    const SsLossParams p{1.0, 2.0};
    LossTerms lt = total_loss(inst.t, inst.t_aug, inst.x, inst.x_aug, inst.bases, 1e-2, p);
    CHECK(lt.total() == lt.cpd + lt.reg + lt.ss);
    CHECK(lt.cpd == cpd_loss(inst.t, inst.t_aug, inst.x, inst.x_aug, inst.bases));
    CHECK(lt.reg == reg_loss(inst.x, inst.x_aug, inst.bases, 1e-2));
    CHECK(lt.ss == ss_loss(inst.x, inst.x_aug, p));

    // All three terms zeroed by construction: zero data, zero parameters,
    // contrastive weight off.
    DenseTensor zt_data({2, 4, 5, 3});
    KruskalBases zb = {Matrix(4, 3), Matrix(5, 3), Matrix(3, 3)};
    Matrix zx(2, 3);
    LossTerms zt = total_loss(zt_data, zt_data, zx, zx, zb, 0.5, {0.0, 0.0});
    CHECK(zt.cpd == 0.0);
    CHECK(zt.reg == 0.0);
    CHECK(zt.ss == 0.0);
    CHECK(zt.total() == 0.0);
}

TEST_CASE("bound constants") {
    auto balanced = bound_constants({0.5, 0.5}, 1.0);
    CHECK(balanced.c1 == doctest::Approx(2.0));
    CHECK(balanced.c2 == doctest::Approx(2.0));

    auto skewed = bound_constants({0.2, 0.8}, 1.0);
    CHECK(skewed.c1 == doctest::Approx(5.0));
    CHECK(skewed.c2 == doctest::Approx(1.25));

    auto scaled = bound_constants({0.5, 0.5}, 2.0);
    CHECK(scaled.c1 == doctest::Approx(3.0));
    CHECK(scaled.c2 == doctest::Approx(3.0));
    CHECK(scaled.c1 >= scaled.c2);

    CHECK_THROWS_AS(bound_constants({1.0, 0.0}, 1.0), validation_error);
    CHECK_THROWS_AS(bound_constants({0.3, 0.3}, 1.0), validation_error);
    CHECK_THROWS_AS(bound_constants({0.5, 0.5}, 0.5), validation_error);
}

TEST_CASE("concentration bound values and monotonicity") {
    CHECK(concentration_bound(100, 0.0, 0.05) ==
          doctest::Approx(0.27298867605603533).epsilon(1e-12));

    double prev = concentration_bound(100, 0.0, 0.05);
    for (std::size_t n : {1000u, 10000u}) {
        const double cur = concentration_bound(n, 0.0, 0.05);
        CHECK(cur < prev);
        prev = cur;
    }

    // delta = 2/e^2 makes ln(2/delta) = 2 and the bound simplifies.
    const double delta = 2.0 / std::exp(2.0);
    for (std::size_t n : {10u, 50u, 333u}) {
        const double nn = static_cast<double>(n);
        CHECK(concentration_bound(n, 0.0, delta) ==
              doctest::Approx(std::sqrt((1.0 + 1.0 / (nn - 1.0)) * 4.0 / nn)).epsilon(1e-12));
    }

    CHECK_THROWS_AS(concentration_bound(1, 0.0, 0.05), validation_error);
    CHECK_THROWS_AS(concentration_bound(100, -1.0, 0.05), validation_error);
    CHECK_THROWS_AS(concentration_bound(100, 0.0, 1.0), validation_error);
}

TEST_CASE("estimator concentrates within the theoretical radius") {
    // 200 independent draws of the estimator at N=256; at least 95% must sit
    // within the 95% radius of their own mean.
    const std::size_t n = 256, rank = 16, trials = 200;
    const double radius = concentration_bound(n, 0.0, 0.05);
    std::vector<double> estimates(trials);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        Rng rng(Rng::derive(4242, trial));
        Matrix a = random_matrix(rng, n, rank);
        Matrix b = random_matrix(rng, n, rank);
        estimates[trial] = ss_loss(a, b, {0.0, 1.0});
    }
    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= static_cast<double>(trials);
    std::size_t inside = 0;
    for (double e : estimates)
        if (std::abs(e - mean) < radius) ++inside;
    CHECK(inside >= trials * 95 / 100);
}
