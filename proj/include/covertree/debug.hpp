#ifndef COVERTREE_DEBUG_HPP
#define COVERTREE_DEBUG_HPP

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <string>
#include <vector>

/**
 * @file debug.hpp
 *
 * Runtime lemma assertions. Off by default; COVERTREE_DEBUG_ASSERTS=1 in the
 * environment (or set_debug_asserts(true)) turns them on. Failures are
 * recorded rather than thrown so a sweep can report every one of them.
 */

namespace covertree {

struct LemmaFailure {
    std::string lemma;
    std::string detail;
};

class LemmaRegistry {
public:
    static LemmaRegistry& instance() {
        static LemmaRegistry registry;
        return registry;
    }

    void record_check(bool ok, const char* lemma, const std::string& detail) {
        std::lock_guard lock(mutex_);
        ++checks_;
        if (!ok) {
            ++failed_;
            if (failures_.size() < kKept) {
                failures_.push_back({lemma, detail});
            }
        }
    }

    std::uint64_t checks() const {
        std::lock_guard lock(mutex_);
        return checks_;
    }

    std::uint64_t failed() const {
        std::lock_guard lock(mutex_);
        return failed_;
    }

    std::vector<LemmaFailure> failures() const {
        std::lock_guard lock(mutex_);
        return failures_;
    }

    void reset() {
        std::lock_guard lock(mutex_);
        checks_ = 0;
        failed_ = 0;
        failures_.clear();
    }

private:
    static constexpr std::size_t kKept = 64;

    mutable std::mutex mutex_;
    std::uint64_t checks_ = 0;
    std::uint64_t failed_ = 0;
    std::vector<LemmaFailure> failures_;
};

namespace detail {

inline std::atomic<int>& debug_override() {
    static std::atomic<int> value{-1};
    return value;
}

} // namespace detail

inline bool debug_asserts_enabled() {
    const int forced = detail::debug_override().load(std::memory_order_relaxed);
    if (forced >= 0) {
        return forced != 0;
    }
    static const bool from_env = [] {
        const char* v = std::getenv("COVERTREE_DEBUG_ASSERTS");
        return v != nullptr && std::strcmp(v, "1") == 0;
    }();
    return from_env;
}

/// Overrides the environment; pass -1 to fall back to it again.
inline void set_debug_asserts(int enabled) { detail::debug_override().store(enabled, std::memory_order_relaxed); }

template <class Detail>
void lemma_check(bool ok, const char* lemma, Detail&& detail) {
    LemmaRegistry::instance().record_check(ok, lemma, ok ? std::string() : std::string(detail()));
}

} // namespace covertree

#endif
