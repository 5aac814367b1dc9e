#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "atd/alloc_stats.hpp"
#include "atd/common.hpp"
#include "atd/matrix.hpp"

namespace atd {

// Dense order-N array of doubles, row-major with the last index fastest.
// Immutable by convention once built by the pipeline: every operation below
// takes it const and returns fresh storage.
class DenseTensor {
public:
    DenseTensor() = default;

    // Zero-filled tensor of the given shape. Extents must all be >= 1.
    explicit DenseTensor(std::vector<std::size_t> shape);

    // Takes ownership of a row-major payload; rejects length mismatch and
    // non-finite entries.
    DenseTensor(std::vector<std::size_t> shape, tracked_doubles payload);

    std::size_t order() const { return shape_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t extent(std::size_t mode) const { return shape_[mode]; }
    std::size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double operator[](std::size_t flat) const { return data_[flat]; }
    double& operator[](std::size_t flat) { return data_[flat]; }

    // Contiguous slice along the first mode: rows [row, row+count).
    const double* first_mode_slice(std::size_t row) const;
    std::size_t slice_size() const; // elements per first-mode row

    void require_finite(const char* what) const;

    friend bool operator==(const DenseTensor& a, const DenseTensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    std::vector<std::size_t> shape_;
    tracked_doubles data_;
};

// Mode-m unfolding (0-based mode). The result has extent(m) rows; columns
// enumerate the remaining modes in their original order, last index fastest,
// which is the layout the Khatri-Rao kernels assume.
Matrix unfold(const DenseTensor& t, std::size_t mode);

// Inverse of unfold: rebuilds the tensor of `shape` from its mode-m unfolding.
DenseTensor fold(const Matrix& m, std::size_t mode, const std::vector<std::size_t>& shape);

// Sum of squared entries.
double frobenius_norm_sq(const DenseTensor& t);

// A gathered subset of first-mode rows, copied into its own tensor so batch
// processing never aliases the parent.
struct TensorBatch {
    std::vector<std::size_t> indices; // rows of the parent, distinct
    DenseTensor tensor;               // shape (indices.size(), rest...)
};

// Seeded permutation of {0..N-1} split into ceil(N/b) chunks; every chunk has
// b indices except possibly the last. `shuffle=false` keeps identity order.
std::vector<std::vector<std::size_t>> make_batch_plan(std::size_t n, std::size_t b,
                                                      std::uint64_t seed, bool shuffle = true);

TensorBatch gather_batch(const DenseTensor& t, const std::vector<std::size_t>& indices);

// Convenience form that materializes all batches at once. Fine for tests and
// small data; the solver gathers lazily from the plan instead.
std::vector<TensorBatch> split_batches(const DenseTensor& t, std::size_t b, std::uint64_t seed,
                                       bool shuffle = true);

// Binary tensor file: magic "ATD1", u8 order, order x u32 little-endian
// extents, then the row-major payload as little-endian IEEE-754 doubles.
DenseTensor read_tensor(const std::string& path);
void write_tensor(const DenseTensor& t, const std::string& path);

} // namespace atd
