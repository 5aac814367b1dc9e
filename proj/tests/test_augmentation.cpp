#include <doctest.h>

#include <cmath>
#include <numbers>

#include "atd/augmentation.hpp"
#include "atd/solver.hpp"
#include "atd/synth.hpp"
#include "helpers.hpp"

using namespace atd;
using namespace atd::testing;

namespace {

SignalEpoch sine_epoch(std::size_t channels, std::size_t samples, double fs, double freq,
                       double amp = 1.0, double phase = 0.0) {
    SignalEpoch e;
    e.channels = channels;
    e.samples = samples;
    e.sample_rate = fs;
    e.data.resize(channels * samples);
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t i = 0; i < samples; ++i)
            e.data[c * samples + i] =
                amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs +
                               phase + 0.3 * static_cast<double>(c));
    return e;
}

SignalEpoch constant_epoch(std::size_t channels, std::size_t samples, double fs, double value) {
    SignalEpoch e;
    e.channels = channels;
    e.samples = samples;
    e.sample_rate = fs;
    e.data.assign(channels * samples, value);
    return e;
}

} // namespace

TEST_CASE("jitter: identity at zero degree, bounded and centered noise") {
    SignalEpoch e = sine_epoch(2, 512, 100.0, 3.0);
    SignalEpoch same = jitter(e, 0.0, JitterKind::high, 1);
    CHECK(same.data == e.data);

    SignalEpoch big = constant_epoch(1, 10000, 100.0, 0.0);
    SignalEpoch noisy = jitter(big, 0.1, JitterKind::high, 2);
    double mean = 0.0;
    for (std::size_t i = 0; i < noisy.samples; ++i) {
        const double d = noisy.data[i] - big.data[i];
        CHECK(std::abs(d) <= 0.1);
        mean += d;
    }
    mean /= static_cast<double>(noisy.samples);
    CHECK(std::abs(mean) < 0.01);
}

TEST_CASE("jitter 'both' adds the two noise kinds") {
    SignalEpoch e = constant_epoch(2, 400, 100.0, 1.0);
    SignalEpoch out = jitter(e, 0.2, JitterKind::both, 11);
    bool moved = false;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        CHECK(std::abs(out.data[i] - e.data[i]) <= 0.4 + 1e-15); // d + d
        moved |= out.data[i] != e.data[i];
    }
    CHECK(moved);
}

TEST_CASE("low-frequency jitter is piecewise affine between knots") {
    SignalEpoch e = constant_epoch(1, 300, 100.0, 0.0);
    SignalEpoch out = jitter(e, 0.5, JitterKind::low, 3);
    // 300 samples -> 3 knots at positions 0, 149.5, 299; second differences
    // vanish away from the knots.
    const double step = 299.0 / 2.0;
    for (std::size_t i = 1; i + 1 < e.samples; ++i) {
        const double pos_lo = std::floor(static_cast<double>(i - 1) / step);
        const double pos_hi = std::floor(static_cast<double>(i + 1) / step);
        if (pos_lo != pos_hi) continue; // straddles a knot
        const double second = out.data[i + 1] - 2.0 * out.data[i] + out.data[i - 1];
        CHECK(std::abs(second) <= 1e-12);
    }
    for (double v : out.data) CHECK(std::abs(v) <= 0.5);
}

TEST_CASE("first-order filter step responses") {
    const double fs = 100.0;
    SignalEpoch ones = constant_epoch(1, 4096, fs, 1.0);

    // Lowpass settles at the constant: >= 10 time constants at 1 Hz cutoff.
    SignalEpoch lp = bandpass(ones, 0.5, 1.0, BandKind::lowpass);
    CHECK(std::abs(lp.data.back() - 1.0) <= 0.01);

    // Highpass of a constant decays to zero.
    SignalEpoch hp = bandpass(ones, 1.0, 2.0, BandKind::highpass);
    CHECK(std::abs(hp.data.back()) <= 0.01);

    CHECK_THROWS_AS(bandpass(ones, 5.0, 2.0, BandKind::band), validation_error);
    CHECK_THROWS_AS(bandpass(ones, 1.0, 60.0, BandKind::band), validation_error);
}

TEST_CASE("lowpass passes the cutoff sinusoid at -3 dB") {
    const double fs = 1000.0, fc = 50.0;
    SignalEpoch sine = sine_epoch(1, 8000, fs, fc);
    SignalEpoch out = bandpass(sine, 1.0, fc, BandKind::lowpass);
    // Steady-state amplitude over the second half of the signal.
    double peak = 0.0;
    for (std::size_t i = 4000; i < 8000; ++i) peak = std::max(peak, std::abs(out.data[i]));
    CHECK(peak == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.05));
}

TEST_CASE("time rotation: definitional cases and the group property") {
    SignalEpoch e = constant_epoch(1, 4, 10.0, 0.0);
    for (int i = 0; i < 4; ++i) e.data[i] = static_cast<double>(i + 1);
    SignalEpoch rot = time_rotation(e, 2);
    CHECK(rot.data == std::vector<double>{3, 4, 1, 2});

    CHECK(time_rotation(e, 4).data == e.data); // full split is the identity

    Rng rng(8);
    SignalEpoch sig = sine_epoch(3, 64, 100.0, 5.0);
    for (std::size_t split : {1u, 13u, 40u}) {
        SignalEpoch twice = time_rotation(time_rotation(sig, split), sig.samples - split);
        CHECK(twice.data == sig.data);
    }
    CHECK_THROWS_AS(time_rotation(e, 0), validation_error);
    CHECK_THROWS_AS(time_rotation(e, 9), validation_error);
}

TEST_CASE("3d rotation preserves per-timestep triple norms") {
    SignalEpoch e = sine_epoch(6, 128, 50.0, 2.0);

    const std::array<double, 9> eye = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    CHECK(rotation3d(e, eye).data == e.data);

    // 90 degrees about z: x -> y.
    const std::array<double, 9> z90 = {0, -1, 0, 1, 0, 0, 0, 0, 1};
    SignalEpoch unitx = constant_epoch(3, 8, 10.0, 0.0);
    for (std::size_t i = 0; i < 8; ++i) unitx.data[i] = 1.0; // channel 0 = x
    SignalEpoch turned = rotation3d(unitx, z90);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(turned.data[0 * 8 + i] == doctest::Approx(0.0));
        CHECK(turned.data[1 * 8 + i] == doctest::Approx(1.0));
        CHECK(turned.data[2 * 8 + i] == doctest::Approx(0.0));
    }

    const auto rot = random_rotation(99);
    SignalEpoch out = rotation3d(e, rot);
    for (std::size_t g = 0; g < 2; ++g)
        for (std::size_t i = 0; i < e.samples; ++i) {
            auto norm3 = [&](const SignalEpoch& s) {
                const double x = s.data[(3 * g) * s.samples + i];
                const double y = s.data[(3 * g + 1) * s.samples + i];
                const double z = s.data[(3 * g + 2) * s.samples + i];
                return std::sqrt(x * x + y * y + z * z);
            };
            CHECK(norm3(out) == doctest::Approx(norm3(e)).epsilon(1e-12));
        }

    SignalEpoch odd = constant_epoch(4, 8, 10.0, 1.0);
    CHECK_THROWS_AS(rotation3d(odd, eye), validation_error);
    std::array<double, 9> skewed = eye;
    skewed[1] = 0.5;
    CHECK_THROWS_AS(rotation3d(e, skewed), validation_error);
}

TEST_CASE("stft produces the documented shapes") {
    struct Case {
        std::size_t channels, samples, nfft, hop, want_c, want_b, want_f;
    };
    // Third-order sample formats from the four signal corpora.
    const Case cases[] = {
        {7, 3000, 256, 32, 14, 129, 86},
        {9, 128, 64, 2, 18, 33, 33},
        {12, 5000, 256, 64, 24, 129, 75},
        {6, 6000, 512, 128, 12, 257, 43},
    };
    for (const auto& c : cases) {
        SignalEpoch e = sine_epoch(c.channels, c.samples, 100.0, 7.0);
        DenseTensor t = stft_tensorize(e, {c.nfft, c.hop});
        CHECK(t.shape() == std::vector<std::size_t>{c.want_c, c.want_b, c.want_f});
    }
    SignalEpoch tiny = sine_epoch(1, 63, 100.0, 5.0);
    CHECK_THROWS_AS(stft_tensorize(tiny, {64, 2}), validation_error);
    StftSpec bad{100, 10};
    CHECK_THROWS_AS(bad.validate(), validation_error);
}

TEST_CASE("stft amplitude and phase planes carry the spectral line") {
    // A pure tone at an exact bin lands all energy in that bin.
    const double fs = 128.0;
    const std::size_t nfft = 64;
    SignalEpoch e = sine_epoch(1, 256, fs, 8.0); // bin 4 of 64 at fs 128
    DenseTensor t = stft_tensorize(e, {nfft, 32});
    const std::size_t bins = nfft / 2 + 1;
    const std::size_t frames = (256 - 64) / 32 + 1;
    REQUIRE(t.shape() == std::vector<std::size_t>{2, bins, frames});
    // Amplitude plane: bin 4 dominates every frame.
    for (std::size_t fr = 0; fr < frames; ++fr) {
        double best = -1.0;
        std::size_t arg = 0;
        for (std::size_t b = 0; b < bins; ++b) {
            const double v = t[b * frames + fr];
            if (v > best) {
                best = v;
                arg = b;
            }
        }
        CHECK(arg == 4);
        CHECK(best == doctest::Approx(32.0).epsilon(1e-6)); // nfft/2 * amp
    }
    // Phase plane values stay in (-pi, pi].
    for (std::size_t idx = bins * frames; idx < 2 * bins * frames; ++idx) {
        CHECK(t[idx] <= std::numbers::pi);
        CHECK(t[idx] > -std::numbers::pi);
    }
}

TEST_CASE("augment: single-method plans, determinism, method frequencies") {
    SignalEpoch e = sine_epoch(3, 200, 100.0, 4.0);

    AugmentationPlan only_rot;
    only_rot.methods = kAugTimeRotation;
    only_rot.seed = 5;
    SignalEpoch rotated = augment(e, only_rot);
    // Some rotation of the input: every channel is a cyclic shift.
    bool found = false;
    for (std::size_t split = 1; split <= e.samples && !found; ++split) {
        found = time_rotation(e, split).data == rotated.data;
    }
    CHECK(found);

    AugmentationPlan plan;
    plan.methods = kAugJitter | kAugBandpass | kAugTimeRotation | kAugRotation3d;
    plan.seed = 77;
    SignalEpoch a = augment(e, plan);
    SignalEpoch b = augment(e, plan);
    CHECK(a.data == b.data);

    // Method frequencies over 10^4 seeded draws; a short epoch keeps the
    // actual transforms cheap.
    SignalEpoch tiny = sine_epoch(3, 64, 100.0, 4.0);
    AugmentationPlan freq = plan;
    freq.low_hp = 1.0;
    freq.high_hp = 20.0;
    freq.low_lp = 5.0;
    freq.high_lp = 30.0;
    std::size_t counts[4] = {0, 0, 0, 0};
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        freq.seed = seed;
        AugMethod chosen{};
        (void)augment(tiny, freq, &chosen);
        switch (chosen) {
            case kAugJitter: counts[0]++; break;
            case kAugBandpass: counts[1]++; break;
            case kAugTimeRotation: counts[2]++; break;
            default: counts[3]++; break;
        }
    }
    for (std::size_t m = 0; m < 4; ++m) {
        CHECK(counts[m] >= 2350);
        CHECK(counts[m] <= 2650);
    }

    AugmentationPlan empty;
    empty.methods = 0;
    CHECK_THROWS_AS(augment(e, empty), validation_error);
}

TEST_CASE("augmentations preserve the epoch geometry") {
    SignalEpoch e = sine_epoch(6, 240, 80.0, 3.0);
    AugmentationPlan plan;
    plan.methods = kAugJitter | kAugBandpass | kAugTimeRotation | kAugRotation3d;
    plan.low_hp = 1.0;
    plan.high_hp = 20.0;
    plan.low_lp = 5.0;
    plan.high_lp = 30.0;
    for (std::uint64_t seed = 0; seed < 16; ++seed) {
        plan.seed = seed;
        SignalEpoch out = augment(e, plan);
        CHECK(out.channels == e.channels);
        CHECK(out.samples == e.samples);
        CHECK(out.sample_rate == e.sample_rate);
    }
}

TEST_CASE("epoch files round trip with their sidecar") {
    SignalEpoch e = sine_epoch(2, 64, 123.5, 6.0);
    write_epoch(e, "epoch_test.dtz");
    SignalEpoch back = read_epoch("epoch_test.dtz");
    CHECK(back.channels == e.channels);
    CHECK(back.samples == e.samples);
    CHECK(back.sample_rate == e.sample_rate);
    CHECK(back.data == e.data);
}

TEST_CASE("augmented samples keep their class in feature space") {
    // Two spectral classes of synthetic signals; features come from a plain
    // decomposition of the clean tensorized data.
    const double fs = 64.0;
    const std::size_t samples = 256, per_class = 40;
    const StftSpec spec{64, 16};
    Rng rng(505);

    std::vector<SignalEpoch> epochs;
    std::vector<int> labels;
    for (std::size_t idx = 0; idx < 2 * per_class; ++idx) {
        const int label = static_cast<int>(idx % 2);
        // Two tones per class so the amplitude planes carry real structure.
        const double f1 = label == 0 ? 6.0 : 14.0;
        const double f2 = label == 0 ? 9.0 : 20.0;
        SignalEpoch e = sine_epoch(3, samples, fs, f1, 1.0 + 0.1 * rng.gaussian(),
                                   rng.uniform(0.0, 6.28));
        SignalEpoch second = sine_epoch(3, samples, fs, f2, 0.6 + 0.06 * rng.gaussian(),
                                        rng.uniform(0.0, 6.28));
        for (std::size_t i = 0; i < e.data.size(); ++i)
            e.data[i] += second.data[i] + 0.01 * rng.gaussian();
        epochs.push_back(std::move(e));
        labels.push_back(label);
    }

    auto tensorize_all = [&](const std::vector<SignalEpoch>& es) {
        DenseTensor first = stft_tensorize(es[0], spec);
        std::vector<std::size_t> shape = {es.size(), first.extent(0), first.extent(1),
                                          first.extent(2)};
        DenseTensor all(shape);
        for (std::size_t i = 0; i < es.size(); ++i) {
            DenseTensor t = stft_tensorize(es[i], spec);
            for (std::size_t j = 0; j < t.size(); ++j) all[i * t.size() + j] = t[j];
        }
        return all;
    };
    DenseTensor data = tensorize_all(epochs);

    SaoConfig cfg;
    cfg.rank = 4;
    cfg.mode = SolverMode::cp_als_full;
    cfg.max_sweeps = 20;
    cfg.stop_tol = 1e-30;
    cfg.seed = 3;
    KruskalBases bases = cp_als_full(data, cfg).bases;
    Matrix feats = extract_features(data, bases, 1e-3);

    // Class centroids in feature space.
    Matrix centroids(2, feats.cols());
    std::size_t counts[2] = {0, 0};
    for (std::size_t i = 0; i < feats.rows(); ++i) {
        for (std::size_t c = 0; c < feats.cols(); ++c)
            centroids(labels[i], c) += feats(i, c);
        counts[labels[i]]++;
    }
    for (int m = 0; m < 2; ++m)
        for (std::size_t c = 0; c < feats.cols(); ++c)
            centroids(m, c) /= static_cast<double>(counts[m]);

    // Jitter each epoch and re-extract.
    std::vector<SignalEpoch> augmented;
    for (std::size_t i = 0; i < epochs.size(); ++i)
        augmented.push_back(jitter(epochs[i], 0.05, JitterKind::high, 1000 + i));
    Matrix aug_feats = extract_features(tensorize_all(augmented), bases, 1e-3);

    std::size_t stayed = 0;
    for (std::size_t i = 0; i < aug_feats.rows(); ++i) {
        double dist[2] = {0.0, 0.0};
        for (int m = 0; m < 2; ++m)
            for (std::size_t c = 0; c < aug_feats.cols(); ++c) {
                const double d = aug_feats(i, c) - centroids(m, c);
                dist[m] += d * d;
            }
        if (dist[labels[i]] < dist[1 - labels[i]]) ++stayed;
    }
    CHECK(stayed >= aug_feats.rows() * 9 / 10);
}
