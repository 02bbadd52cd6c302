#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "replimit/image.hpp"

namespace replimit {

enum class CaptionStyle { Specific, General };
// FineTune draws circles, rectangles and stripes; Fusion draws crosses, rings
// and triangles, so the two families never share a shape kind.
enum class ShapeFamily { FineTune, Fusion };

std::string_view to_string(CaptionStyle s);
std::string_view to_string(ShapeFamily f);
CaptionStyle parse_caption_style(std::string_view s);
ShapeFamily parse_shape_family(std::string_view s);

struct SynthSpec {
    std::size_t n_base = 64;
    std::size_t dup_factor = 1;
    double dup_fraction = 0.0;
    CaptionStyle caption_style = CaptionStyle::Specific;
    ShapeFamily family = ShapeFamily::FineTune;
    std::size_t h = 16;
    std::size_t w = 16;
    std::uint64_t seed = 0;

    void validate() const;
    std::size_t duplicated_count() const;  // ceil(dup_fraction * n_base)
    std::size_t dataset_size() const { return n_base + duplicated_count() * (dup_factor - 1); }
};

struct SynthExample {
    ToyImage image;
    std::string caption;
    std::size_t base_index = 0;
};

// The n_base distinct images in generation order, then dup_factor - 1 extra
// passes over the first duplicated_count() of them.
std::vector<SynthExample> gen_synth_dataset(const SynthSpec& spec);

// The distinct images only (first n_base entries of gen_synth_dataset).
std::vector<SynthExample> gen_synth_base(const SynthSpec& spec);

nlohmann::json to_json(const SynthSpec& spec);
// Missing keys keep their defaults; type errors name the offending key under `where`.
SynthSpec synth_spec_from_json(const nlohmann::json& j, const std::string& where = "dataset");

}  // namespace replimit
