#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mmi::io {

// Binary tensor container. Layout, all little-endian:
//   magic "MMIT" | version u8 (=1) | dtype u8 (1 = IEEE-754 f32) |
//   ndim u8 | reserved u8 (=0) | dims: ndim x u64 | payload: row-major f32.
struct TensorFile {
    std::vector<std::uint64_t> dims;
    std::vector<float> data; // length = product(dims)

    std::uint64_t element_count() const {
        std::uint64_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

void write_tensor(const TensorFile& tensor, const std::string& path);
TensorFile read_tensor(const std::string& path);

} // namespace mmi::io
