#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace replimit {

// Dense float32 tensor, row-major. Used for image stacks, latents and sample grids.
struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    std::size_t element_count() const;
    bool operator==(const Tensor&) const = default;
};

// On-disk layout: "RLTN", u32 version (=1), u32 rank, rank x u32 dims, float32 payload.
// All integers and floats little-endian.
inline constexpr char kTensorMagic[4] = {'R', 'L', 'T', 'N'};
inline constexpr std::uint32_t kTensorVersion = 1;

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");

void save_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

namespace detail {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_f32(std::vector<std::uint8_t>& out, float v);
std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset);
float get_f32(std::span<const std::uint8_t> bytes, std::size_t offset);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace detail
}  // namespace replimit
