#include "atd/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <memory>

#include "atd/rng.hpp"
#include "atd/simd.hpp"

namespace atd {

namespace {

std::size_t checked_product(const std::vector<std::size_t>& shape) {
    if (shape.empty()) throw validation_error("tensor: empty shape");
    std::size_t total = 1;
    for (std::size_t e : shape) {
        if (e == 0) throw validation_error("tensor: zero extent");
        if (e > std::numeric_limits<std::size_t>::max() / total)
            throw validation_error("tensor: extent product overflows");
        total *= e;
    }
    return total;
}

} // namespace

DenseTensor::DenseTensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_product(shape_), 0.0) {}

DenseTensor::DenseTensor(std::vector<std::size_t> shape, tracked_doubles payload)
    : shape_(std::move(shape)), data_(std::move(payload)) {
    if (checked_product(shape_) != data_.size())
        throw validation_error("tensor: payload length does not match shape");
    require_finite("tensor");
}

void DenseTensor::require_finite(const char* what) const {
    for (double v : data_)
        if (!std::isfinite(v)) throw validation_error(std::string(what) + ": non-finite entry");
}

std::size_t DenseTensor::slice_size() const {
    return shape_.empty() ? 0 : data_.size() / shape_[0];
}

const double* DenseTensor::first_mode_slice(std::size_t row) const {
    return data_.data() + row * slice_size();
}

Matrix unfold(const DenseTensor& t, std::size_t mode) {
    const std::size_t order = t.order();
    if (mode >= order) throw validation_error("unfold: mode out of range");
    const auto& shape = t.shape();

    // inner = product of extents after `mode`, outer = product before it.
    std::size_t inner = 1;
    for (std::size_t m = mode + 1; m < order; ++m) inner *= shape[m];
    std::size_t outer = 1;
    for (std::size_t m = 0; m < mode; ++m) outer *= shape[m];

    const std::size_t rows = shape[mode];
    Matrix out(rows, outer * inner);
    const double* src = t.data();
    // Row-major walk of the source; the destination column index keeps the
    // remaining modes in original order with the last one fastest.
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t r = 0; r < rows; ++r) {
            double* dst = out.row(r) + o * inner;
            std::memcpy(dst, src + (o * rows + r) * inner, inner * sizeof(double));
        }
    return out;
}

DenseTensor fold(const Matrix& m, std::size_t mode, const std::vector<std::size_t>& shape) {
    if (mode >= shape.size()) throw validation_error("fold: mode out of range");
    DenseTensor t(shape);
    std::size_t inner = 1;
    for (std::size_t k = mode + 1; k < shape.size(); ++k) inner *= shape[k];
    std::size_t outer = 1;
    for (std::size_t k = 0; k < mode; ++k) outer *= shape[k];
    const std::size_t rows = shape[mode];
    if (m.rows() != rows || m.cols() != outer * inner)
        throw validation_error("fold: matrix shape does not match target");
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t r = 0; r < rows; ++r)
            std::memcpy(t.data() + (o * rows + r) * inner, m.row(r) + o * inner,
                        inner * sizeof(double));
    return t;
}

double frobenius_norm_sq(const DenseTensor& t) {
    return simd::sum_squares(t.data(), t.size());
}

std::vector<std::vector<std::size_t>> make_batch_plan(std::size_t n, std::size_t b,
                                                      std::uint64_t seed, bool shuffle) {
    if (b == 0) throw validation_error("batch plan: batch size must be >= 1");
    if (n == 0) throw validation_error("batch plan: empty first mode");

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    if (shuffle) {
        Rng rng(seed);
        for (std::size_t i = n; i > 1; --i)
            std::swap(perm[i - 1], perm[rng.below(i)]);
    }

    std::vector<std::vector<std::size_t>> plan;
    plan.reserve((n + b - 1) / b);
    for (std::size_t start = 0; start < n; start += b) {
        const std::size_t end = std::min(start + b, n);
        plan.emplace_back(perm.begin() + start, perm.begin() + end);
    }
    return plan;
}

TensorBatch gather_batch(const DenseTensor& t, const std::vector<std::size_t>& indices) {
    const std::size_t slice = t.slice_size();
    std::vector<std::size_t> shape = t.shape();
    shape[0] = indices.size();
    DenseTensor out(shape);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= t.extent(0)) throw validation_error("gather_batch: index out of range");
        std::memcpy(out.data() + i * slice, t.first_mode_slice(indices[i]),
                    slice * sizeof(double));
    }
    return {indices, std::move(out)};
}

std::vector<TensorBatch> split_batches(const DenseTensor& t, std::size_t b, std::uint64_t seed,
                                       bool shuffle) {
    std::vector<TensorBatch> out;
    for (const auto& idx : make_batch_plan(t.extent(0), b, seed, shuffle))
        out.push_back(gather_batch(t, idx));
    return out;
}

// --- binary file format ----------------------------------------------------

namespace {

constexpr char kMagic[4] = {'A', 'T', 'D', '1'};

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

static_assert(std::endian::native == std::endian::little,
              "tensor i/o assumes a little-endian host");

} // namespace

void write_tensor(const DenseTensor& t, const std::string& path) {
    if (t.order() > 255) throw validation_error("write_tensor: order exceeds format limit");
    for (std::size_t e : t.shape())
        if (e > std::numeric_limits<std::uint32_t>::max())
            throw validation_error("write_tensor: extent exceeds u32");

    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw io_error("write_tensor: cannot open " + path);

    std::fwrite(kMagic, 1, 4, f.get());
    const std::uint8_t order = static_cast<std::uint8_t>(t.order());
    std::fwrite(&order, 1, 1, f.get());
    for (std::size_t e : t.shape()) {
        const std::uint32_t e32 = static_cast<std::uint32_t>(e);
        std::fwrite(&e32, 4, 1, f.get());
    }
    if (std::fwrite(t.data(), sizeof(double), t.size(), f.get()) != t.size())
        throw io_error("write_tensor: short write to " + path);
    if (std::fflush(f.get()) != 0) throw io_error("write_tensor: flush failed for " + path);
}

DenseTensor read_tensor(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw io_error("read_tensor: cannot open " + path);

    char magic[4];
    if (std::fread(magic, 1, 4, f.get()) != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw io_error("read_tensor: bad magic in " + path);

    std::uint8_t order = 0;
    if (std::fread(&order, 1, 1, f.get()) != 1 || order == 0)
        throw io_error("read_tensor: bad order in " + path);

    std::vector<std::size_t> shape(order);
    std::size_t total = 1;
    for (auto& e : shape) {
        std::uint32_t e32 = 0;
        if (std::fread(&e32, 4, 1, f.get()) != 1)
            throw io_error("read_tensor: truncated header in " + path);
        if (e32 == 0) throw io_error("read_tensor: zero extent in " + path);
        if (e32 > std::numeric_limits<std::size_t>::max() / total)
            throw io_error("read_tensor: extent overflow in " + path);
        e = e32;
        total *= e32;
    }

    tracked_doubles payload(total);
    if (std::fread(payload.data(), sizeof(double), total, f.get()) != total)
        throw io_error("read_tensor: truncated payload in " + path);
    for (double v : payload)
        if (!std::isfinite(v)) throw io_error("read_tensor: non-finite value in " + path);

    return DenseTensor(std::move(shape), std::move(payload));
}

} // namespace atd
