#include "replimit/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "replimit/errors.hpp"

namespace replimit {

std::size_t Tensor::element_count() const {
    if (dims.empty()) return 0;
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

namespace detail {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
    return v;
}

float get_f32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    return std::bit_cast<float>(get_u32(bytes, offset));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("short write to " + path.string());
}

}  // namespace detail

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
    if (t.element_count() != t.data.size())
        throw ContractError("tensor dims do not match payload size");
    std::vector<std::uint8_t> out(kTensorMagic, kTensorMagic + 4);
    detail::put_u32(out, kTensorVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) detail::put_u32(out, d);
    out.reserve(out.size() + 4 * t.data.size());
    for (float v : t.data) detail::put_f32(out, v);
    return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes, const std::string& origin) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kTensorMagic, 4) != 0)
        throw FormatError(origin + ": bad magic, expected RLTN");
    const auto version = detail::get_u32(bytes, 4);
    if (version != kTensorVersion)
        throw FormatError(origin + ": unsupported tensor version " + std::to_string(version));
    const auto rank = detail::get_u32(bytes, 8);
    const std::size_t header = 12 + 4 * std::size_t{rank};
    if (bytes.size() < header) throw FormatError(origin + ": truncated dims header");

    Tensor t;
    for (std::uint32_t i = 0; i < rank; ++i) t.dims.push_back(detail::get_u32(bytes, 12 + 4 * i));
    const std::size_t expected = header + 4 * t.element_count();
    if (bytes.size() != expected)
        throw FormatError(origin + ": payload length mismatch, expected " + std::to_string(expected) +
                          " bytes, got " + std::to_string(bytes.size()));
    t.data.resize(t.element_count());
    for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = detail::get_f32(bytes, header + 4 * i);
    return t;
}

void save_tensor(const Tensor& t, const std::filesystem::path& path) {
    detail::write_file_bytes(path, encode_tensor(t));
}

Tensor load_tensor(const std::filesystem::path& path) {
    return decode_tensor(detail::read_file_bytes(path), path.string());
}

}  // namespace replimit
