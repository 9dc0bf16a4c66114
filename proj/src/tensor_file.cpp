#include "mminduction/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "mminduction/error.hpp"

namespace mmi::io {

namespace {

constexpr char kMagic[4] = {'M', 'M', 'I', 'T'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 1;

static_assert(std::endian::native == std::endian::little,
              "byte-swapping for big-endian hosts is not implemented");

void put_u64(std::ofstream& out, std::uint64_t v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.write(buf, 8);
}

std::uint64_t get_u64(std::ifstream& in, const std::string& path) {
    char buf[8];
    if (!in.read(buf, 8))
        throw Error("MalformedTensor", path + ": truncated dimension table");
    std::uint64_t v;
    std::memcpy(&v, buf, 8);
    return v;
}

} // namespace

void write_tensor(const TensorFile& tensor, const std::string& path) {
    if (tensor.dims.size() > 255)
        throw Error("MalformedTensor", "ndim exceeds 255");
    if (tensor.element_count() != tensor.data.size())
        throw Error("MalformedTensor", "payload length does not match dims");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot open " + path);
    out.write(kMagic, 4);
    out.put(static_cast<char>(kVersion));
    out.put(static_cast<char>(kDtypeF32));
    out.put(static_cast<char>(tensor.dims.size()));
    out.put(0); // reserved
    for (auto d : tensor.dims) put_u64(out, d);
    if (!tensor.data.empty())
        out.write(reinterpret_cast<const char*>(tensor.data.data()),
                  static_cast<std::streamsize>(tensor.data.size() * sizeof(float)));
    if (!out) throw Error("IoError", "write failed for " + path);
}

TensorFile read_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot open " + path);
    char header[8];
    if (!in.read(header, 8))
        throw Error("MalformedTensor", path + ": truncated header (offset 0)");
    if (std::memcmp(header, kMagic, 4) != 0)
        throw Error("MalformedTensor", path + ": bad magic (offset 0)");
    if (static_cast<std::uint8_t>(header[4]) != kVersion)
        throw Error("MalformedTensor", path + ": unsupported version (offset 4)");
    if (static_cast<std::uint8_t>(header[5]) != kDtypeF32)
        throw Error("MalformedTensor", path + ": unsupported dtype (offset 5)");
    if (header[7] != 0)
        throw Error("MalformedTensor", path + ": nonzero reserved byte (offset 7)");
    const auto ndim = static_cast<std::size_t>(static_cast<std::uint8_t>(header[6]));

    TensorFile tensor;
    tensor.dims.resize(ndim);
    for (std::size_t i = 0; i < ndim; ++i) tensor.dims[i] = get_u64(in, path);

    const std::uint64_t count = tensor.element_count();
    tensor.data.resize(count);
    if (count > 0 &&
        !in.read(reinterpret_cast<char*>(tensor.data.data()),
                 static_cast<std::streamsize>(count * sizeof(float))))
        throw Error("MalformedTensor", path + ": truncated payload");
    // exactly one tensor per file
    char extra;
    if (in.read(&extra, 1))
        throw Error("MalformedTensor", path + ": trailing bytes after payload");
    return tensor;
}

} // namespace mmi::io
