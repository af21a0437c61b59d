#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace multihop {

// Incremental FNV-1a (64-bit). Used for index file checksums and for
// pinning analyzer configuration in manifests.
class Fnv1a {
public:
    void update(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ULL;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a64(std::string_view s) {
    Fnv1a h;
    h.update(s);
    return h.digest();
}

std::string to_hex(std::uint64_t v);

}  // namespace multihop
