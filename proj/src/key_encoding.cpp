#include "scalestore/key_encoding.hpp"

#include <cstdint>

#include "scalestore/errors.hpp"

namespace scalestore {

namespace {

void put_int(std::string& out, std::int64_t v) {
    auto u = static_cast<std::uint64_t>(v) ^ (std::uint64_t{1} << 63);
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<char>((u >> shift) & 0xFF));
    }
}

std::int64_t get_int(std::string_view in, std::size_t& pos) {
    if (pos + 8 > in.size()) throw TypeMismatch("truncated integer in key");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u = (u << 8) | static_cast<unsigned char>(in[pos++]);
    return static_cast<std::int64_t>(u ^ (std::uint64_t{1} << 63));
}

void put_string(std::string& out, std::string_view s) {
    for (char c : s) {
        out.push_back(c);
        if (c == '\0') out.push_back('\xFF');
    }
    out.push_back('\0');
    out.push_back('\x01');
}

std::string get_string(std::string_view in, std::size_t& pos) {
    std::string s;
    while (pos < in.size()) {
        char c = in[pos++];
        if (c != '\0') {
            s.push_back(c);
            continue;
        }
        if (pos >= in.size()) break;
        char next = in[pos++];
        if (next == '\x01') return s;
        if (next == '\xFF') {
            s.push_back('\0');
            continue;
        }
        break;
    }
    throw TypeMismatch("malformed string in key");
}

void put_value(std::string& out, const Value& v) {
    switch (kind_of(v)) {
        case FieldKind::string: put_string(out, std::get<std::string>(v)); break;
        case FieldKind::integer: put_int(out, std::get<std::int64_t>(v)); break;
        case FieldKind::date: put_int(out, std::get<Date>(v).days); break;
    }
}

}  // namespace

std::string CompositeKey::hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes_.size() * 2);
    for (unsigned char c : bytes_) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 0xF]);
    }
    return out;
}

CompositeKey encode_key(std::span<const Value> tuple, std::span<const FieldKind> kinds) {
    if (tuple.size() > kinds.size()) {
        throw TypeMismatch("tuple has " + std::to_string(tuple.size()) + " fields, key has " +
                           std::to_string(kinds.size()));
    }
    for (std::size_t i = 0; i < tuple.size(); ++i) {
        if (kind_of(tuple[i]) != kinds[i]) {
            throw TypeMismatch("key field " + std::to_string(i) + " expects " +
                               std::string(to_string(kinds[i])) + ", got " +
                               std::string(to_string(kind_of(tuple[i]))));
        }
    }
    return encode_key(tuple);
}

CompositeKey encode_key(std::span<const Value> tuple) {
    std::string out;
    for (const auto& v : tuple) put_value(out, v);
    return CompositeKey{std::move(out)};
}

Tuple decode_key(const CompositeKey& key, std::span<const FieldKind> kinds) {
    Tuple out;
    std::string_view in = key.bytes();
    std::size_t pos = 0;
    for (auto kind : kinds) {
        if (pos == in.size()) break;
        switch (kind) {
            case FieldKind::string: out.emplace_back(get_string(in, pos)); break;
            case FieldKind::integer: out.emplace_back(get_int(in, pos)); break;
            case FieldKind::date:
                out.emplace_back(Date{static_cast<std::int32_t>(get_int(in, pos))});
                break;
        }
    }
    if (pos != in.size()) throw TypeMismatch("trailing bytes in key");
    return out;
}

CompositeKey prefix_successor(const CompositeKey& prefix) {
    std::string s = prefix.bytes();
    while (!s.empty() && static_cast<unsigned char>(s.back()) == 0xFF) s.pop_back();
    if (s.empty()) return {};
    s.back() = static_cast<char>(static_cast<unsigned char>(s.back()) + 1);
    return CompositeKey{std::move(s)};
}

std::strong_ordering compare_tuples(std::span<const Value> a, std::span<const Value> b) {
    std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i].index() != b[i].index()) return a[i].index() <=> b[i].index();
        std::strong_ordering c = std::strong_ordering::equal;
        switch (kind_of(a[i])) {
            case FieldKind::string: {
                // Byte order, matching how strings compare once encoded.
                int r = std::get<std::string>(a[i]).compare(std::get<std::string>(b[i]));
                c = r <=> 0;
                break;
            }
            case FieldKind::integer:
                c = std::get<std::int64_t>(a[i]) <=> std::get<std::int64_t>(b[i]);
                break;
            case FieldKind::date: c = std::get<Date>(a[i]) <=> std::get<Date>(b[i]); break;
        }
        if (c != 0) return c;
    }
    return a.size() <=> b.size();
}

}  // namespace scalestore
