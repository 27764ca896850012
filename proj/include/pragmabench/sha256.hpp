#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace pragmabench {

// Incremental SHA-256 (FIPS 180-4). The harness uses it for request digests
// and dataset binding; no external crypto dependency is pulled in for this.
class Sha256 {
public:
    Sha256();

    void update(const void* data, std::size_t size);
    void update(std::string_view text) { update(text.data(), text.size()); }

    // Finalizes and returns the 32-byte digest. The instance must not be
    // updated afterwards.
    std::array<std::uint8_t, 32> finish();

private:
    void process_block(const std::uint8_t* block);

    std::array<std::uint32_t, 8> state_;
    std::array<std::uint8_t, 64> buffer_;
    std::size_t buffer_len_ = 0;
    std::uint64_t total_bytes_ = 0;
};

// Lowercase hex digest of the given bytes.
std::string sha256_hex(std::string_view bytes);

} // namespace pragmabench
