#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dsac/errors.hpp"

namespace dsac {

/// Mixed-radix global indexing. Row-major: the first factor is the most
/// significant digit, so encode((1, 2), {3, 4}) == 1 * 4 + 2.
inline std::size_t encode_global(std::span<const std::size_t> tuple,
                                 std::span<const std::size_t> factor_sizes) {
    if (tuple.size() != factor_sizes.size())
        throw IndexError("encode_global: tuple has " + std::to_string(tuple.size()) +
                         " components, expected " + std::to_string(factor_sizes.size()));
    std::size_t index = 0;
    for (std::size_t i = 0; i < tuple.size(); ++i) {
        if (tuple[i] >= factor_sizes[i])
            throw IndexError("encode_global: component " + std::to_string(i) + " = " +
                             std::to_string(tuple[i]) + " out of range [0, " +
                             std::to_string(factor_sizes[i]) + ")");
        index = index * factor_sizes[i] + tuple[i];
    }
    return index;
}

inline std::size_t product(std::span<const std::size_t> factor_sizes) {
    std::size_t p = 1;
    for (auto n : factor_sizes) p *= n;
    return p;
}

inline std::vector<std::size_t> decode_global(std::size_t index,
                                              std::span<const std::size_t> factor_sizes) {
    if (index >= product(factor_sizes))
        throw IndexError("decode_global: index " + std::to_string(index) + " out of range");
    std::vector<std::size_t> tuple(factor_sizes.size());
    for (std::size_t i = factor_sizes.size(); i-- > 0;) {
        tuple[i] = index % factor_sizes[i];
        index /= factor_sizes[i];
    }
    return tuple;
}

} // namespace dsac
