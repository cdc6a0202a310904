#pragma once

// Link rates are carried in bits/s, queue contents and thresholds in bytes.
// Every drain or headroom computation converts through these two helpers.

namespace vqlab {

inline constexpr double bits_per_byte = 8.0;

constexpr double to_bytes_per_second(double bits_per_second) noexcept
{
    return bits_per_second / bits_per_byte;
}

constexpr double to_bits_per_second(double bytes_per_second) noexcept
{
    return bytes_per_second * bits_per_byte;
}

}  // namespace vqlab
