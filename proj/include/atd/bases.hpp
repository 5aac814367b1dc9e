#pragma once

#include <cstdint>

#include "atd/matrix.hpp"

namespace atd {

// The shared basis triple of a rank-R model: A is I x R, B is J x R, C is K x R.
struct KruskalBases {
    Matrix A, B, C;

    std::size_t rank() const { return A.cols(); }

    std::vector<const Matrix*> as_list() const { return {&A, &B, &C}; }
};

// i.i.d. standard normal entries scaled by 1/sqrt(R), seeded.
KruskalBases init_bases(std::size_t i, std::size_t j, std::size_t k, std::size_t rank,
                        std::uint64_t seed);

} // namespace atd
