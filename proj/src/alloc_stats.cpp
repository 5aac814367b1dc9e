#include "atd/alloc_stats.hpp"

namespace atd::alloc_stats {

namespace {
thread_local std::size_t g_current = 0;
thread_local Scope* g_top = nullptr;
} // namespace

std::size_t current_bytes() { return g_current; }

Scope::Scope() : baseline_(g_current), parent_(g_top) { g_top = this; }

Scope::~Scope() { g_top = parent_; }

void on_alloc(std::size_t bytes) {
    g_current += bytes;
    for (Scope* s = g_top; s != nullptr; s = s->parent_) {
        std::size_t over = g_current > s->baseline_ ? g_current - s->baseline_ : 0;
        if (over > s->peak_) s->peak_ = over;
    }
}

void on_free(std::size_t bytes) {
    g_current = bytes > g_current ? 0 : g_current - bytes;
}

} // namespace atd::alloc_stats
