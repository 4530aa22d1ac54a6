#pragma once

#include <compare>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scalestore/value.hpp"

namespace scalestore {

// Byte string whose lexicographic (unsigned) order equals the tuple order of
// the values it was encoded from.
class CompositeKey {
public:
    CompositeKey() = default;
    explicit CompositeKey(std::string bytes) : bytes_(std::move(bytes)) {}

    const std::string& bytes() const noexcept { return bytes_; }
    bool empty() const noexcept { return bytes_.empty(); }
    std::size_t size() const noexcept { return bytes_.size(); }

    std::string hex() const;

    friend bool operator==(const CompositeKey&, const CompositeKey&) = default;
    friend std::strong_ordering operator<=>(const CompositeKey& a, const CompositeKey& b) {
        int c = a.bytes_.compare(b.bytes_);
        return c < 0 ? std::strong_ordering::less
             : c > 0 ? std::strong_ordering::greater
                     : std::strong_ordering::equal;
    }

private:
    std::string bytes_;
};

// Integers and dates: 8 bytes big-endian with the sign bit flipped.
// Strings: raw bytes, 0x00 escaped as 0x00 0xFF, terminated by 0x00 0x01.
CompositeKey encode_key(std::span<const Value> tuple, std::span<const FieldKind> kinds);
CompositeKey encode_key(std::span<const Value> tuple);
Tuple decode_key(const CompositeKey& key, std::span<const FieldKind> kinds);

// Smallest key strictly greater than every key that starts with `prefix`.
// Empty result means "no upper bound" (prefix was all 0xFF).
CompositeKey prefix_successor(const CompositeKey& prefix);

// Lexicographic comparison of typed tuples, the oracle for encoding order.
std::strong_ordering compare_tuples(std::span<const Value> a, std::span<const Value> b);

}  // namespace scalestore
