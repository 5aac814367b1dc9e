#include "atd/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>

#include "atd/rng.hpp"

namespace atd {

void SignalEpoch::validate() const {
    if (channels == 0) throw validation_error("epoch: no channels");
    if (samples < 2) throw validation_error("epoch: needs at least two samples");
    if (data.size() != channels * samples) throw validation_error("epoch: payload size mismatch");
    if (!(sample_rate > 0.0)) throw validation_error("epoch: sample rate must be positive");
    for (double v : data)
        if (!std::isfinite(v)) throw validation_error("epoch: non-finite sample");
}

SignalEpoch jitter(const SignalEpoch& e, double d, JitterKind kind, std::uint64_t seed) {
    e.validate();
    if (d < 0.0) throw validation_error("jitter: degree must be >= 0");
    SignalEpoch out = e;
    if (d == 0.0) return out;

    Rng rng(seed);
    const std::size_t n = e.samples;

    auto add_high = [&](double* ch) {
        for (std::size_t i = 0; i < n; ++i) ch[i] += d * rng.uniform(-1.0, 1.0);
    };
    auto add_low = [&](double* ch) {
        const std::size_t knots = std::max<std::size_t>(2, (n + 99) / 100);
        std::vector<double> u(knots);
        for (auto& v : u) v = rng.uniform(-1.0, 1.0);
        const double step = static_cast<double>(n - 1) / static_cast<double>(knots - 1);
        for (std::size_t i = 0; i < n; ++i) {
            const double pos = static_cast<double>(i) / step;
            std::size_t k = std::min(static_cast<std::size_t>(pos), knots - 2);
            const double frac = pos - static_cast<double>(k);
            ch[i] += d * ((1.0 - frac) * u[k] + frac * u[k + 1]);
        }
    };

    for (std::size_t c = 0; c < e.channels; ++c) {
        double* ch = out.channel(c);
        if (kind == JitterKind::high || kind == JitterKind::both) add_high(ch);
        if (kind == JitterKind::low || kind == JitterKind::both) add_low(ch);
    }
    return out;
}

namespace {

// First-order bilinear-transform section, cutoff prewarped so the analog
// -3 dB point lands exactly on fc.
struct FirstOrderSection {
    double b0, b1, a1;

    static FirstOrderSection lowpass(double fc, double fs) {
        const double k = std::tan(std::numbers::pi * fc / fs);
        return {k / (k + 1.0), k / (k + 1.0), (k - 1.0) / (k + 1.0)};
    }
    static FirstOrderSection highpass(double fc, double fs) {
        const double k = std::tan(std::numbers::pi * fc / fs);
        return {1.0 / (k + 1.0), -1.0 / (k + 1.0), (k - 1.0) / (k + 1.0)};
    }

    void run(double* ch, std::size_t n) const {
        double xm1 = 0.0, ym1 = 0.0; // zero initial state
        for (std::size_t i = 0; i < n; ++i) {
            const double x = ch[i];
            const double y = b0 * x + b1 * xm1 - a1 * ym1;
            ch[i] = y;
            xm1 = x;
            ym1 = y;
        }
    }
};

} // namespace

SignalEpoch bandpass(const SignalEpoch& e, double low_hz, double high_hz, BandKind kind) {
    e.validate();
    const double nyquist = e.sample_rate / 2.0;
    if (!(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < nyquist))
        throw validation_error("bandpass: band edges must satisfy 0 < low < high < fs/2");

    SignalEpoch out = e;
    const auto hp = FirstOrderSection::highpass(low_hz, e.sample_rate);
    const auto lp = FirstOrderSection::lowpass(high_hz, e.sample_rate);
    for (std::size_t c = 0; c < e.channels; ++c) {
        double* ch = out.channel(c);
        if (kind == BandKind::highpass || kind == BandKind::band) hp.run(ch, e.samples);
        if (kind == BandKind::lowpass || kind == BandKind::band) lp.run(ch, e.samples);
    }
    return out;
}

SignalEpoch time_rotation(const SignalEpoch& e, std::size_t split) {
    e.validate();
    if (split > e.samples || split == 0)
        throw validation_error("time_rotation: split out of range");
    if (split == e.samples) return e; // full rotation is the identity
    SignalEpoch out = e;
    const std::size_t tail = e.samples - split;
    for (std::size_t c = 0; c < e.channels; ++c) {
        const double* src = e.channel(c);
        double* dst = out.channel(c);
        std::memcpy(dst, src + split, tail * sizeof(double));
        std::memcpy(dst + tail, src, split * sizeof(double));
    }
    return out;
}

SignalEpoch rotation3d(const SignalEpoch& e, const std::array<double, 9>& rot) {
    e.validate();
    if (e.channels % 3 != 0)
        throw validation_error("rotation3d: channel count must be divisible by 3");
    // rot^T rot = I and det = +1, both to 1e-10.
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k) dot += rot[k * 3 + i] * rot[k * 3 + j];
            if (std::abs(dot - (i == j ? 1.0 : 0.0)) > 1e-10)
                throw validation_error("rotation3d: matrix is not orthogonal");
        }
    const double det = rot[0] * (rot[4] * rot[8] - rot[5] * rot[7]) -
                       rot[1] * (rot[3] * rot[8] - rot[5] * rot[6]) +
                       rot[2] * (rot[3] * rot[7] - rot[4] * rot[6]);
    if (std::abs(det - 1.0) > 1e-10)
        throw validation_error("rotation3d: determinant must be +1");

    SignalEpoch out = e;
    for (std::size_t g = 0; g < e.channels / 3; ++g) {
        const double* x = e.channel(3 * g);
        const double* y = e.channel(3 * g + 1);
        const double* z = e.channel(3 * g + 2);
        double* ox = out.channel(3 * g);
        double* oy = out.channel(3 * g + 1);
        double* oz = out.channel(3 * g + 2);
        for (std::size_t i = 0; i < e.samples; ++i) {
            ox[i] = rot[0] * x[i] + rot[1] * y[i] + rot[2] * z[i];
            oy[i] = rot[3] * x[i] + rot[4] * y[i] + rot[5] * z[i];
            oz[i] = rot[6] * x[i] + rot[7] * y[i] + rot[8] * z[i];
        }
    }
    return out;
}

std::array<double, 9> random_rotation(std::uint64_t seed) {
    Rng rng(seed);
    // Uniform unit quaternion.
    double q[4];
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& v : q) {
            v = rng.gaussian();
            norm += v * v;
        }
    } while (norm < 1e-12);
    norm = std::sqrt(norm);
    for (auto& v : q) v /= norm;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
            2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
            2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

void AugmentationPlan::validate(double sample_rate) const {
    if (methods == 0) throw validation_error("augmentation plan: no methods enabled");
    if (jitter_d < 0.0) throw validation_error("augmentation plan: jitter degree must be >= 0");
    const double nyquist = sample_rate / 2.0;
    if (methods & kAugBandpass) {
        if (!(low_hp > 0.0 && low_hp < high_hp && high_hp < nyquist))
            throw validation_error("augmentation plan: highpass band edges out of range");
        if (!(low_lp > 0.0 && low_lp < high_lp && high_lp < nyquist))
            throw validation_error("augmentation plan: lowpass band edges out of range");
    }
}

SignalEpoch augment(const SignalEpoch& e, const AugmentationPlan& plan, AugMethod* chosen_out) {
    e.validate();
    plan.validate(e.sample_rate);

    std::vector<unsigned> enabled;
    for (unsigned m : {kAugJitter, kAugBandpass, kAugTimeRotation, kAugRotation3d})
        if (plan.methods & m) enabled.push_back(m);

    Rng rng(plan.seed);
    const unsigned chosen = enabled[rng.below(enabled.size())];
    if (chosen_out) *chosen_out = static_cast<AugMethod>(chosen);
    const std::uint64_t sub_seed = Rng::derive(plan.seed, 0x5B);

    switch (chosen) {
        case kAugJitter: {
            const JitterKind kind = static_cast<JitterKind>(rng.below(3));
            return jitter(e, plan.jitter_d, kind, sub_seed);
        }
        case kAugBandpass: {
            switch (rng.below(3)) {
                case 0: return bandpass(e, plan.low_lp, plan.high_lp, BandKind::lowpass);
                case 1: return bandpass(e, plan.low_hp, plan.high_hp, BandKind::highpass);
                default: return bandpass(e, plan.low_hp, plan.high_lp, BandKind::band);
            }
        }
        case kAugTimeRotation: {
            const std::size_t split = 1 + rng.below(e.samples - 1);
            return time_rotation(e, split);
        }
        default:
            return rotation3d(e, random_rotation(sub_seed));
    }
}

void StftSpec::validate() const {
    if (nfft < 2 || (nfft & (nfft - 1)) != 0)
        throw validation_error("stft: nfft must be a power of two >= 2");
    if (hop == 0 || hop > nfft) throw validation_error("stft: hop must lie in [1, nfft]");
}

DenseTensor stft_tensorize(const SignalEpoch& e, const StftSpec& spec) {
    e.validate();
    spec.validate();
    if (e.samples < spec.nfft)
        throw validation_error("stft: epoch shorter than the transform size");

    const std::size_t bins = spec.bins();
    const std::size_t frames = spec.frames(e.samples);
    DenseTensor out({2 * e.channels, bins, frames});

    // Direct one-sided transform per rectangular frame; no centering, no
    // padding. Desk-scale inputs keep the O(nfft) inner product acceptable.
    std::vector<double> cos_tab(spec.nfft * bins), sin_tab(spec.nfft * bins);
    for (std::size_t f = 0; f < bins; ++f)
        for (std::size_t i = 0; i < spec.nfft; ++i) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(f) *
                               static_cast<double>(i) / static_cast<double>(spec.nfft);
            cos_tab[f * spec.nfft + i] = std::cos(ang);
            sin_tab[f * spec.nfft + i] = std::sin(ang);
        }

    const std::size_t plane = bins * frames;
    for (std::size_t c = 0; c < e.channels; ++c) {
        const double* ch = e.channel(c);
        double* amp = out.data() + (2 * c) * plane;
        double* phase = out.data() + (2 * c + 1) * plane;
        for (std::size_t fr = 0; fr < frames; ++fr) {
            const double* frame = ch + fr * spec.hop;
            for (std::size_t f = 0; f < bins; ++f) {
                double re = 0.0, im = 0.0;
                const double* ct = cos_tab.data() + f * spec.nfft;
                const double* st = sin_tab.data() + f * spec.nfft;
                for (std::size_t i = 0; i < spec.nfft; ++i) {
                    re += frame[i] * ct[i];
                    im += frame[i] * st[i];
                }
                amp[f * frames + fr] = std::hypot(re, im);
                double ph = std::atan2(im, re); // [-pi, pi]; fold -pi onto pi
                if (ph == -std::numbers::pi) ph = std::numbers::pi;
                phase[f * frames + fr] = ph;
            }
        }
    }
    return out;
}

SignalEpoch read_epoch(const std::string& path) {
    DenseTensor t = read_tensor(path);
    if (t.order() != 2) throw io_error("read_epoch: expected an order-2 tensor in " + path);

    std::FILE* f = std::fopen((path + ".meta").c_str(), "rb");
    if (!f) throw io_error("read_epoch: missing sidecar " + path + ".meta");
    double rate = 0.0;
    const int got = std::fscanf(f, "sample_rate=%lf", &rate);
    std::fclose(f);
    if (got != 1 || !(rate > 0.0))
        throw io_error("read_epoch: bad sample_rate in " + path + ".meta");

    SignalEpoch e;
    e.channels = t.extent(0);
    e.samples = t.extent(1);
    e.sample_rate = rate;
    e.data.assign(t.data(), t.data() + t.size());
    e.validate();
    return e;
}

void write_epoch(const SignalEpoch& e, const std::string& path) {
    e.validate();
    DenseTensor t({e.channels, e.samples},
                  tracked_doubles(e.data.begin(), e.data.end()));
    write_tensor(t, path);
    std::FILE* f = std::fopen((path + ".meta").c_str(), "wb");
    if (!f) throw io_error("write_epoch: cannot open " + path + ".meta");
    std::fprintf(f, "sample_rate=%.17g\n", e.sample_rate);
    std::fclose(f);
}

} // namespace atd
