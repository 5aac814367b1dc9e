#include <doctest.h>

#include <cmath>

#include "atd/kernels.hpp"
#include "atd/solver.hpp"
#include "atd/synth.hpp"
#include "helpers.hpp"
#include "oracle.hpp"

using namespace atd;
using namespace atd::testing;

TEST_CASE("generator: degenerate single-class, inversion, noise variance") {
    SyntheticSpec flat;
    flat.n = 6;
    flat.classes = 1;
    flat.tau = 0.0;
    flat.sigma = 0.0;
    flat.seed = 2;
    SyntheticData d = generate(flat);
    // Every slice identical.
    const std::size_t slice = d.tensor.slice_size();
    for (std::size_t s = 1; s < flat.n; ++s)
        for (std::size_t i = 0; i < slice; ++i)
            CHECK(d.tensor[s * slice + i] == d.tensor[i]);

    SyntheticSpec clean;
    clean.n = 30;
    clean.sigma = 0.0;
    clean.seed = 5;
    SyntheticData c = generate(clean);
    auto [x, unused] = cold_start(c.tensor, nullptr, c.bases, 1e-10);
    CHECK(max_abs_diff(x, c.coefficients) <= 1e-8);

    // Element variance of the additive noise matches sigma^2 within 5%.
    SyntheticSpec noisy = clean;
    noisy.sigma = 0.01;
    noisy.n = 60;
    SyntheticData nz = generate(noisy);
    SyntheticData base = generate(clean); // same seed, sigma 0 -> same signal part
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < base.tensor.size(); ++i) {
        const double d2 = nz.tensor[i] - base.tensor[i];
        acc += d2 * d2;
        ++count;
    }
    const double measured = acc / static_cast<double>(count);
    CHECK(measured == doctest::Approx(1e-4).epsilon(0.05));
}

TEST_CASE("generator rejects inconsistent specs") {
    SyntheticSpec bad;
    bad.centroids = {{1.0, 0.0}, {1.0, 0.0}};
    bad.r_true = 2;
    CHECK_THROWS_AS(generate(bad), validation_error);
    bad = SyntheticSpec{};
    bad.tau = -1.0;
    CHECK_THROWS_AS(generate(bad), validation_error);
}

TEST_CASE("feature extraction: identity limit, linearity, minimality") {
    // Orthonormal single columns make the gram the identity.
    Matrix a(4, 1), b(3, 1), c(5, 1);
    a(1, 0) = 1.0;
    b(2, 0) = 1.0;
    c(0, 0) = 1.0;
    KruskalBases bases{a, b, c};
    Matrix x(2, 1);
    x(0, 0) = 1.5;
    x(1, 0) = -0.25;
    DenseTensor t = kruskal_reconstruct(&x, bases.as_list());
    Matrix feats = extract_features(t, bases, 1e-12);
    CHECK(max_abs_diff(feats, x) <= 1e-10);

    // Scaling a sample scales its features.
    Rng rng(91);
    KruskalBases rb = init_bases(4, 3, 5, 2, 17);
    DenseTensor sample = random_tensor(rng, {1, 4, 3, 5});
    DenseTensor scaled = sample;
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] *= 3.0;
    Matrix f1 = extract_features(sample, rb, 1e-3);
    Matrix f2 = extract_features(scaled, rb, 1e-3);
    for (std::size_t i = 0; i < f1.size(); ++i)
        CHECK(f2.data()[i] == doctest::Approx(3.0 * f1.data()[i]).epsilon(1e-12));

    // The ridge objective at the output beats 100 random perturbations.
    const double alpha = 0.05;
    Matrix f = extract_features(sample, rb, alpha);
    auto objective = [&](const Matrix& m) {
        return reconstruction_error_sq(sample, &m, rb.as_list()) + alpha * m.frobenius_sq();
    };
    const double best = objective(f);
    for (int i = 0; i < 100; ++i) {
        Matrix probe = f;
        probe.add_scaled(random_matrix(rng, f.rows(), f.cols()), 0.02);
        CHECK(objective(probe) >= best);
    }
}

namespace {

LabeledFeatures blob_data(std::uint64_t seed, std::size_t per_class, double separation) {
    Rng rng(seed);
    LabeledFeatures lf;
    lf.features = Matrix(2 * per_class, 2);
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        const int label = static_cast<int>(i % 2);
        lf.labels.push_back(label);
        lf.features(i, 0) = (label == 0 ? -separation : separation) + rng.gaussian();
        lf.features(i, 1) = rng.gaussian();
    }
    return lf;
}

} // namespace

TEST_CASE("linear evaluation: separable data, chance level, optimism direction") {
    LabeledFeatures train = blob_data(1, 100, 6.0);
    LabeledFeatures test = blob_data(2, 100, 6.0);
    LinearModel model = train_linear(train, {});
    CHECK(accuracy(model, test) >= 0.99);

    // Shuffled labels drop to chance on balanced two-class data.
    LabeledFeatures shuffled = blob_data(3, 200, 6.0);
    Rng rng(4);
    for (std::size_t i = shuffled.labels.size(); i > 1; --i)
        std::swap(shuffled.labels[i - 1], shuffled.labels[rng.below(i)]);
    LinearModel chance_model = train_linear(shuffled, {});
    const double chance = accuracy(chance_model, blob_data(5, 200, 6.0));
    CHECK(chance >= 0.4);
    CHECK(chance <= 0.6);

    // Train accuracy dominates held-out accuracy on average. Train and test
    // are disjoint halves of one draw, and the feature space is wide enough
    // relative to the sample count that the fit actually memorizes.
    double train_acc = 0.0, test_acc = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(200 + seed);
        const std::size_t rows = 40, dims = 20;
        auto half = [&] {
            LabeledFeatures lf;
            lf.features = Matrix(rows, dims);
            for (std::size_t i = 0; i < rows; ++i) {
                const int label = static_cast<int>(i % 2);
                lf.labels.push_back(label);
                lf.features(i, 0) = (label == 0 ? -0.8 : 0.8) + rng.gaussian();
                for (std::size_t c = 1; c < dims; ++c) lf.features(i, c) = rng.gaussian();
            }
            return lf;
        };
        LabeledFeatures tr = half();
        LabeledFeatures te = half();
        LinearModel m = train_linear(tr, {});
        train_acc += accuracy(m, tr);
        test_acc += accuracy(m, te);
    }
    CHECK(train_acc >= test_acc);

    LabeledFeatures single = blob_data(6, 10, 1.0);
    for (auto& l : single.labels) l = 0;
    CHECK_THROWS_AS(train_linear(single, {}), validation_error);
}

TEST_CASE("feature csv round trip") {
    LabeledFeatures lf = blob_data(7, 4, 2.0);
    write_features_csv(lf, "features_test.csv");
    LabeledFeatures back = read_features_csv("features_test.csv");
    CHECK(back.labels == lf.labels);
    CHECK(max_abs_diff(back.features, lf.features) == 0.0);
}

TEST_CASE("end-to-end: contrastive features separate the synthetic classes") {
    // Downstream protocol at reduced size; the acceptance suite runs the full
    // five-seed version.
    SyntheticSpec spec;
    spec.n = 200;
    spec.classes = 2;
    spec.tau = 0.2;
    spec.sigma = 0.05;
    spec.seed = 123;
    SyntheticData data = generate(spec);

    SaoConfig cfg;
    cfg.rank = 8;
    cfg.beta = 0.5;
    cfg.gamma = 8.0;
    cfg.eta = 0.8;
    cfg.batch_size = 32;
    cfg.max_sweeps = 20;
    cfg.stop_tol = 1e-12;
    cfg.seed = 7;
    cfg.mode = SolverMode::atd;
    cfg.aug_sigma = 0.05;
    SolveResult res = sao_run(data.tensor, cfg);

    Matrix feats = extract_features(data.tensor, res.bases, 1e-3);
    LabeledFeatures train, test;
    const std::size_t half = spec.n / 2;
    train.features = Matrix(half, cfg.rank);
    test.features = Matrix(half, cfg.rank);
    for (std::size_t i = 0; i < half; ++i) {
        for (std::size_t c = 0; c < cfg.rank; ++c) {
            train.features(i, c) = feats(i, c);
            test.features(i, c) = feats(half + i, c);
        }
        train.labels.push_back(data.labels[i]);
        test.labels.push_back(data.labels[half + i]);
    }
    LinearModel model = train_linear(train, {});
    CHECK(accuracy(model, test) >= 0.9);
}
