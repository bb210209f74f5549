#pragma once

#include <optional>

#include "spamlab/error.hpp"

/// Code of the spamlab::Error thrown by fn, or nothing when fn returns.
template <typename Fn>
std::optional<spamlab::ErrorCode> code_of(Fn&& fn) {
    try {
        fn();
    } catch (const spamlab::Error& e) {
        return e.code();
    }
    return std::nullopt;
}
