#include "replimit/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "replimit/annotate.hpp"
#include "replimit/errors.hpp"
#include "replimit/hash.hpp"
#include "replimit/lexicon.hpp"

namespace replimit {

DiffusionSchedule make_schedule(int t_max, double beta1, double beta_t) {
    if (t_max < 1) throw ContractError("make_schedule: t_max must be >= 1");
    if (!(beta1 > 0.0 && beta1 <= beta_t && beta_t < 1.0))
        throw ContractError("make_schedule: need 0 < beta1 <= betaT < 1");
    DiffusionSchedule s;
    s.t_max = t_max;
    double abar = 1.0;
    for (int t = 1; t <= t_max; ++t) {
        const double frac = t_max == 1 ? 0.0 : static_cast<double>(t - 1) / (t_max - 1);
        const double beta = beta1 + (beta_t - beta1) * frac;
        s.betas.push_back(beta);
        s.alphas.push_back(1.0 - beta);
        abar *= 1.0 - beta;
        s.alpha_bars.push_back(abar);
    }
    return s;
}

std::vector<double> forward_sample(std::span<const double> x0, int t, std::span<const double> eps,
                                   const DiffusionSchedule& schedule) {
    if (t < 1 || t > schedule.t_max) throw ContractError("forward_sample: t out of range");
    if (x0.size() != eps.size()) throw ContractError("forward_sample: noise dimension mismatch");
    const double a = std::sqrt(schedule.alpha_bar(t));
    const double b = std::sqrt(1.0 - schedule.alpha_bar(t));
    std::vector<double> out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

std::vector<double> visual_encode(const ToyImage& image, std::size_t pool) {
    if (pool == 0 || image.h % pool != 0 || image.w % pool != 0)
        throw ContractError("visual_encode: image " + std::to_string(image.h) + "x" + std::to_string(image.w) +
                            " not divisible by pool factor " + std::to_string(pool));
    const std::size_t lh = image.h / pool, lw = image.w / pool;
    std::vector<double> latent(lh * lw, 0.0);
    const double inv = 1.0 / static_cast<double>(pool * pool);
    for (std::size_t y = 0; y < image.h; ++y)
        for (std::size_t x = 0; x < image.w; ++x) latent[(y / pool) * lw + x / pool] += image.at(y, x);
    for (double& v : latent) v *= inv;
    return latent;
}

ToyImage visual_decode(std::span<const double> latent, const LatentShape& shape) {
    if (latent.size() != shape.dim()) throw ContractError("visual_decode: latent size does not match shape");
    ToyImage img(shape.image_h, shape.image_w);
    for (std::size_t y = 0; y < shape.image_h; ++y)
        for (std::size_t x = 0; x < shape.image_w; ++x)
            img.at(y, x) = static_cast<float>(std::clamp(latent[(y / shape.pool) * shape.w() + x / shape.pool], 0.0, 1.0));
    return img;
}

std::vector<double> text_encode(std::string_view caption, std::size_t d_text) {
    if (d_text == 0) throw ContractError("text_encode: d_text must be positive");
    std::vector<double> e(d_text, 0.0);
    for (const auto& token : tokenize(caption)) {
        const auto h = fnv1a64(ascii_lower(token));
        const double sign = (h >> 63) == 0 ? 1.0 : -1.0;
        e[h % d_text] += sign;
    }
    double ss = 0.0;
    for (double v : e) ss += v * v;
    if (ss > 0.0) {
        const double inv = 1.0 / std::sqrt(ss);
        for (double& v : e) v *= inv;
    }
    return e;
}

namespace {

std::vector<double> convex_mix(std::span<const double> a, std::span<const double> b, double w, const char* what) {
    if (a.size() != b.size()) throw ContractError(std::string(what) + ": dimension mismatch");
    if (!(w >= 0.0 && w <= 1.0)) throw ContractError(std::string(what) + ": weight outside [0,1]");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - w) * a[i] + w * b[i];
    return out;
}

}  // namespace

std::vector<double> fuse_latents(std::span<const double> lat_ft, std::span<const double> lat_fu, double w_lat) {
    return convex_mix(lat_ft, lat_fu, w_lat, "fuse_latents");
}

std::vector<double> fuse_embeddings(std::span<const double> e_ft, std::span<const double> e_fu, double w_emb) {
    return convex_mix(e_ft, e_fu, w_emb, "fuse_embeddings");
}

std::string token_fuse(std::string_view y_ft, std::string_view y_fu) {
    std::string out(y_ft);
    out += ' ';
    out += y_fu;
    const auto first = out.find_first_not_of(' ');
    if (first == std::string::npos) return {};
    const auto last = out.find_last_not_of(' ');
    return out.substr(first, last - first + 1);
}

}  // namespace replimit
