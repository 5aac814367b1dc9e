#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "atd/common.hpp"
#include "atd/tensor.hpp"

namespace atd {

// One raw multichannel sample: channels x samples, row-major per channel.
struct SignalEpoch {
    std::size_t channels = 0;
    std::size_t samples = 0;
    std::vector<double> data; // channels * samples
    double sample_rate = 0.0; // Hz

    double* channel(std::size_t c) { return data.data() + c * samples; }
    const double* channel(std::size_t c) const { return data.data() + c * samples; }

    void validate() const;
};

enum class JitterKind { high, low, both };

// Additive uniform noise scaled by d. `high` draws one value per sample;
// `low` draws ceil(samples/100) knots and linearly interpolates between them,
// so the perturbation is piecewise affine. Either way each element moves by
// at most d (2d for `both`).
SignalEpoch jitter(const SignalEpoch& e, double d, JitterKind kind, std::uint64_t seed);

enum class BandKind { lowpass, highpass, band };

// First-order Butterworth sections discretized by the bilinear transform with
// cutoff prewarping, applied per channel from zero initial state.
// lowpass filters at `high`, highpass at `low`, band cascades both.
SignalEpoch bandpass(const SignalEpoch& e, double low_hz, double high_hz, BandKind kind);

// Swap the two pieces around `split`: out = concat(in[split..], in[..split]),
// the same split for every channel. split == samples is the identity.
SignalEpoch time_rotation(const SignalEpoch& e, std::size_t split);

// Rotate every consecutive (x, y, z) channel triple by `rot` (row-major 3x3,
// orthogonal with determinant +1). Channel count must be divisible by 3.
SignalEpoch rotation3d(const SignalEpoch& e, const std::array<double, 9>& rot);

// Uniformly distributed rotation matrix (quaternion construction).
std::array<double, 9> random_rotation(std::uint64_t seed);

enum AugMethod : unsigned {
    kAugJitter = 1u << 0,
    kAugBandpass = 1u << 1,
    kAugTimeRotation = 1u << 2,
    kAugRotation3d = 1u << 3,
};

struct AugmentationPlan {
    unsigned methods = kAugJitter | kAugBandpass | kAugTimeRotation; // nonempty subset
    double jitter_d = 0.05;
    double low_hp = 1.0, high_hp = 30.0; // band used by the highpass choice
    double low_lp = 10.0, high_lp = 49.0; // band used by the lowpass choice
    std::uint64_t seed = 0;

    void validate(double sample_rate) const;
};

// Seeded uniform choice among the enabled methods; jitter and bandpass pick
// their sub-kind uniformly as well. Deterministic in plan.seed. When given,
// *chosen reports which method ran.
SignalEpoch augment(const SignalEpoch& e, const AugmentationPlan& plan,
                    AugMethod* chosen = nullptr);

struct StftSpec {
    std::size_t nfft = 256; // power of two, >= 2
    std::size_t hop = 32;   // 1 <= hop <= nfft

    void validate() const;
    std::size_t bins() const { return nfft / 2 + 1; }
    std::size_t frames(std::size_t samples) const { return (samples - nfft) / hop + 1; }
};

// Rectangular-window short-time transform. Output shape is
// (2*channels, nfft/2+1, frames): per source channel an amplitude plane then
// a phase plane, interleaved (amp_0, phase_0, amp_1, ...). Phase lies in
// (-pi, pi].
DenseTensor stft_tensorize(const SignalEpoch& e, const StftSpec& spec);

// Epoch files reuse the tensor container with order 2 (channels x samples);
// the sample rate travels in "<path>.meta" as a one-line text header.
SignalEpoch read_epoch(const std::string& path);
void write_epoch(const SignalEpoch& e, const std::string& path);

} // namespace atd
