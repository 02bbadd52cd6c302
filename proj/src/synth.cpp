#include "replimit/synth.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include "replimit/errors.hpp"
#include "replimit/rng.hpp"

namespace replimit {

namespace {

struct Color {
    const char* name;
    float value;
};
constexpr std::array<Color, 6> kColors{{
    {"red", 0.95f}, {"orange", 0.85f}, {"yellow", 0.75f}, {"green", 0.65f}, {"blue", 0.55f}, {"purple", 0.45f}}};

std::string id_string(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%05zu", i);
    return buf;
}

int pick(Rng& rng, int lo, int hi) { return static_cast<int>(rng.between(lo, std::max(lo, hi))); }

struct Drawn {
    ToyImage image;
    std::string kind;
    std::string detail;  // parameter phrase for specific captions
};

Drawn draw_finetune(Rng& rng, std::size_t h, std::size_t w, float ink) {
    const int H = static_cast<int>(h), W = static_cast<int>(w);
    Drawn d{ToyImage(h, w, 0.0f), "", ""};
    switch (rng.below(3)) {
        case 0: {
            const int r = pick(rng, 2, std::min(H, W) / 3);
            const int cy = pick(rng, r, H - 1 - r), cx = pick(rng, r, W - 1 - r);
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) d.image.at(y, x) = ink;
            d.kind = "circle";
            d.detail = "at " + std::to_string(cy) + "," + std::to_string(cx) + " radius " + std::to_string(r);
            break;
        }
        case 1: {
            const int rh = pick(rng, 3, H / 2), rw = pick(rng, 3, W / 2);
            const int y0 = pick(rng, 0, H - rh), x0 = pick(rng, 0, W - rw);
            for (int y = y0; y < y0 + rh; ++y)
                for (int x = x0; x < x0 + rw; ++x) d.image.at(y, x) = ink;
            d.kind = "rectangle";
            d.detail = "at " + std::to_string(y0) + "," + std::to_string(x0) + " size " + std::to_string(rh) + "x" +
                       std::to_string(rw);
            break;
        }
        default: {
            const bool horizontal = rng.below(2) == 0;
            const int extent = horizontal ? H : W;
            const int width = pick(rng, 2, 4);
            const int pos = pick(rng, 0, extent - width);
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    const int c = horizontal ? y : x;
                    if (c >= pos && c < pos + width) d.image.at(y, x) = ink;
                }
            d.kind = "stripe";
            d.detail = std::string(horizontal ? "horizontal" : "vertical") + " at " + std::to_string(pos) + " width " +
                       std::to_string(width);
            break;
        }
    }
    return d;
}

Drawn draw_fusion(Rng& rng, std::size_t h, std::size_t w, float ink) {
    const int H = static_cast<int>(h), W = static_cast<int>(w);
    Drawn d{ToyImage(h, w, 0.0f), "", ""};
    switch (rng.below(3)) {
        case 0: {
            const int arm = pick(rng, 2, std::min(H, W) / 4);
            const int cy = pick(rng, arm, H - 1 - arm), cx = pick(rng, arm, W - 1 - arm);
            for (int k = -arm; k <= arm; ++k) {
                d.image.at(cy + k, cx) = ink;
                d.image.at(cy, cx + k) = ink;
            }
            d.kind = "cross";
            d.detail = "at " + std::to_string(cy) + "," + std::to_string(cx) + " arm " + std::to_string(arm);
            break;
        }
        case 1: {
            const int r = pick(rng, 3, std::min(H, W) / 2 - 2);
            const int cy = pick(rng, r, H - 1 - r), cx = pick(rng, r, W - 1 - r);
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    const double dist = std::hypot(static_cast<double>(y - cy), static_cast<double>(x - cx));
                    if (std::abs(dist - r) <= 0.75) d.image.at(y, x) = ink;
                }
            d.kind = "ring";
            d.detail = "at " + std::to_string(cy) + "," + std::to_string(cx) + " radius " + std::to_string(r);
            break;
        }
        default: {
            const int height = pick(rng, 4, std::min(H, W) / 2);
            const int y0 = pick(rng, 0, H - height), x0 = pick(rng, height - 1, W - height);
            for (int k = 0; k < height; ++k)
                for (int x = x0 - k; x <= x0 + k; ++x) d.image.at(y0 + k, x) = ink;
            d.kind = "triangle";
            d.detail = "at " + std::to_string(y0) + "," + std::to_string(x0) + " height " + std::to_string(height);
            break;
        }
    }
    return d;
}

}  // namespace

std::string_view to_string(CaptionStyle s) { return s == CaptionStyle::Specific ? "specific" : "general"; }
std::string_view to_string(ShapeFamily f) { return f == ShapeFamily::FineTune ? "finetune" : "fusion"; }

CaptionStyle parse_caption_style(std::string_view s) {
    if (s == "specific") return CaptionStyle::Specific;
    if (s == "general") return CaptionStyle::General;
    throw ContractError("unknown caption style '" + std::string(s) + "' (expected specific|general)");
}

ShapeFamily parse_shape_family(std::string_view s) {
    if (s == "finetune") return ShapeFamily::FineTune;
    if (s == "fusion") return ShapeFamily::Fusion;
    throw ContractError("unknown shape family '" + std::string(s) + "' (expected finetune|fusion)");
}

void SynthSpec::validate() const {
    if (n_base < 1) throw ContractError("synth: n_base must be >= 1");
    if (dup_factor < 1) throw ContractError("synth: dup_factor must be >= 1");
    if (!(dup_fraction >= 0.0 && dup_fraction <= 1.0)) throw ContractError("synth: dup_fraction must lie in [0,1]");
    if (h < 12 || w < 12) throw ContractError("synth: images must be at least 12x12");
}

std::size_t SynthSpec::duplicated_count() const {
    return static_cast<std::size_t>(std::ceil(dup_fraction * static_cast<double>(n_base) - 1e-12));
}

std::vector<SynthExample> gen_synth_base(const SynthSpec& spec) {
    spec.validate();
    Rng rng(derive_seed(spec.seed, spec.family == ShapeFamily::FineTune ? 101 : 202));
    std::vector<SynthExample> out;
    out.reserve(spec.n_base);
    for (std::size_t i = 0; i < spec.n_base; ++i) {
        const auto& color = kColors[rng.below(kColors.size())];
        auto drawn = spec.family == ShapeFamily::FineTune ? draw_finetune(rng, spec.h, spec.w, color.value)
                                                          : draw_fusion(rng, spec.h, spec.w, color.value);
        std::string caption = spec.caption_style == CaptionStyle::General
                                  ? "a " + drawn.kind
                                  : std::string(color.name) + " " + drawn.kind + " " + drawn.detail + " id " + id_string(i);
        out.push_back({std::move(drawn.image), std::move(caption), i});
    }
    return out;
}

std::vector<SynthExample> gen_synth_dataset(const SynthSpec& spec) {
    auto out = gen_synth_base(spec);
    const auto dup = spec.duplicated_count();
    out.reserve(spec.dataset_size());
    for (std::size_t pass = 1; pass < spec.dup_factor; ++pass)
        for (std::size_t i = 0; i < dup; ++i) out.push_back(out[i]);
    return out;
}

nlohmann::json to_json(const SynthSpec& s) {
    return {
        {"n_base", s.n_base}, {"dup_factor", s.dup_factor}, {"dup_fraction", s.dup_fraction},
        {"caption_style", to_string(s.caption_style)}, {"family", to_string(s.family)},
        {"h", s.h}, {"w", s.w}, {"seed", s.seed},
    };
}

SynthSpec synth_spec_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw ContractError(where + ": expected an object");
    SynthSpec s;
    for (const auto& [key, value] : j.items()) {
        const auto field = where + "." + key;
        auto need_uint = [&] {
            if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0))
                throw ContractError(field + ": expected a non-negative integer");
            return value.get<std::uint64_t>();
        };
        if (key == "n_base") s.n_base = need_uint();
        else if (key == "dup_factor") s.dup_factor = need_uint();
        else if (key == "h") s.h = need_uint();
        else if (key == "w") s.w = need_uint();
        else if (key == "seed") s.seed = need_uint();
        else if (key == "dup_fraction") {
            if (!value.is_number()) throw ContractError(field + ": expected a number");
            s.dup_fraction = value.get<double>();
        } else if (key == "caption_style" || key == "family") {
            if (!value.is_string()) throw ContractError(field + ": expected a string");
            try {
                if (key == "caption_style") s.caption_style = parse_caption_style(value.get<std::string>());
                else s.family = parse_shape_family(value.get<std::string>());
            } catch (const ContractError& e) {
                throw ContractError(field + ": " + e.what());
            }
        } else {
            throw ContractError(field + ": unknown key");
        }
    }
    try {
        s.validate();
    } catch (const ContractError& e) {
        throw ContractError(where + ": " + e.what());
    }
    return s;
}

}  // namespace replimit
