#pragma once

#include <cstddef>
#include <cstdint>
#include <new>
#include <vector>

namespace atd::alloc_stats {

// Byte accounting for heap buffers that hold numeric payloads (tensors,
// matrices, kernel scratch). Batch working sets and solver scratch are the
// quantities of interest; strings and other plumbing are not tracked.
//
// A Scope measures the high-water mark of tracked bytes allocated *beyond*
// what was live when the scope opened. Scopes nest.

std::size_t current_bytes();

class Scope {
public:
    Scope();
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

    // Peak of (current - baseline) observed so far inside this scope.
    std::size_t peak_bytes() const { return peak_; }

private:
    friend void on_alloc(std::size_t);
    std::size_t baseline_;
    std::size_t peak_ = 0;
    Scope* parent_;
};

void on_alloc(std::size_t bytes);
void on_free(std::size_t bytes);

template <class T>
struct TrackingAlloc {
    using value_type = T;

    TrackingAlloc() noexcept = default;
    template <class U>
    TrackingAlloc(const TrackingAlloc<U>&) noexcept {}

    T* allocate(std::size_t n) {
        on_alloc(n * sizeof(T));
        return static_cast<T*>(::operator new(n * sizeof(T)));
    }
    void deallocate(T* p, std::size_t n) noexcept {
        on_free(n * sizeof(T));
        ::operator delete(p);
    }

    template <class U>
    bool operator==(const TrackingAlloc<U>&) const noexcept { return true; }
};

} // namespace atd::alloc_stats

namespace atd {
// Numeric payload vector whose allocations are visible to alloc_stats.
using tracked_doubles = std::vector<double, alloc_stats::TrackingAlloc<double>>;
} // namespace atd
