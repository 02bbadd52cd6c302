#include "replimit/generalize.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <thread>

#include "httplib.h"

#include "replimit/annotate.hpp"
#include "replimit/errors.hpp"
#include "replimit/hash.hpp"
#include "replimit/rng.hpp"

namespace replimit {

namespace {

constexpr std::string_view kGeneralPrefix = "Convert this caption of an image to a more general caption:";
constexpr std::string_view kGeneralSuffix = ";";
constexpr std::string_view kFiveWordPrefix =
    "Make this caption of an image extremely general (result in less than 5 words): ";
constexpr std::string_view kFiveWordSuffix = ".";

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }
bool ends_with(std::string_view s, std::string_view p) {
    return s.size() >= p.size() && s.substr(s.size() - p.size()) == p;
}

std::string join(const std::vector<std::string>& words, std::size_t limit = std::string::npos) {
    std::string out;
    for (std::size_t i = 0; i < words.size() && i < limit; ++i) {
        if (i) out += ' ';
        out += words[i];
    }
    return out;
}

}  // namespace

std::string_view to_string(GeneralityLevel level) {
    return level == GeneralityLevel::General ? "general" : "five-word";
}

GeneralityLevel parse_generality_level(std::string_view s) {
    if (s == "general") return GeneralityLevel::General;
    if (s == "five-word" || s == "5-word" || s == "five_word") return GeneralityLevel::FiveWord;
    throw ContractError("unknown generality level '" + std::string(s) + "' (expected general|five-word)");
}

std::string build_prompt(std::string_view caption, GeneralityLevel level) {
    if (caption.empty()) throw ContractError("build_prompt: empty caption");
    std::string out;
    if (level == GeneralityLevel::General) {
        out.append(kGeneralPrefix).append(caption).append(kGeneralSuffix);
    } else {
        out.append(kFiveWordPrefix).append(caption).append(kFiveWordSuffix);
    }
    return out;
}

std::vector<std::string> split_words(std::string_view s) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        const auto start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) words.emplace_back(s.substr(start, i - start));
    }
    return words;
}

std::string clean_reply(std::string_view reply) {
    auto trim = [](std::string_view v) {
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
        return v;
    };
    auto v = trim(reply);
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) v = trim(v.substr(1, v.size() - 2));
    // Curly quotes arrive as UTF-8 multibyte sequences.
    constexpr std::string_view lq = "\xE2\x80\x9C", rq = "\xE2\x80\x9D";
    if (starts_with(v, lq) && ends_with(v, rq) && v.size() >= lq.size() + rq.size())
        v = trim(v.substr(lq.size(), v.size() - lq.size() - rq.size()));
    return std::string(v);
}

// ---------------------------------------------------------------------------
// HTTP client

HttpClientConfig HttpClientConfig::from_environment() {
    HttpClientConfig c;
    const char* url = std::getenv("REPLIMIT_LLM_URL");
    if (!url || !*url) throw ContractError("REPLIMIT_LLM_URL is not set");
    c.url = url;
    if (const char* key = std::getenv("REPLIMIT_LLM_KEY")) c.api_key = key;
    return c;
}

HttpChatClient::HttpChatClient(HttpClientConfig config) : config_(std::move(config)) {
    const auto scheme_end = config_.url.find("://");
    if (scheme_end == std::string::npos) throw ContractError("endpoint URL lacks a scheme: " + config_.url);
    const auto path_start = config_.url.find('/', scheme_end + 3);
    origin_ = config_.url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : config_.url.substr(path_start);
}

std::string extract_reply_text(const nlohmann::json& body) {
    if (body.contains("choices") && body["choices"].is_array() && !body["choices"].empty()) {
        const auto& choice = body["choices"][0];
        if (choice.contains("message") && choice["message"].contains("content") &&
            choice["message"]["content"].is_string())
            return choice["message"]["content"].get<std::string>();
        if (choice.contains("text") && choice["text"].is_string()) return choice["text"].get<std::string>();
    }
    if (body.contains("content") && body["content"].is_array()) {
        for (const auto& seg : body["content"])
            if (seg.contains("text") && seg["text"].is_string()) return seg["text"].get<std::string>();
    }
    throw ProviderError("response has no text segment");
}

std::string HttpChatClient::complete(const std::string& model_name, const std::string& prompt) {
    const nlohmann::json payload = {
        {"model", model_name},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
    };
    const auto body = payload.dump();

    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    std::string last_error;
    for (int attempt = 0; attempt <= config_.transport_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(config_.backoff_base * (1 << (attempt - 1)));
        if (last_request_) {
            const auto ready = *last_request_ + config_.inter_request_delay;
            std::this_thread::sleep_until(ready);
        }
        last_request_ = std::chrono::steady_clock::now();
        ++requests_sent_;
        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw ProviderError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error& e) {
            throw ProviderError(std::string("reply is not JSON: ") + e.what());
        }
        return extract_reply_text(reply);
    }
    throw NetworkError(config_.url + ": giving up after " + std::to_string(config_.transport_retries + 1) +
                       " attempts (" + last_error + ")");
}

// ---------------------------------------------------------------------------
// Mock

std::string mock_generalize(std::string_view caption, GeneralityLevel level, const Lexicon& lexicon) {
    const auto ann = annotate(caption, lexicon);
    std::vector<std::string> kept;
    for (const auto& t : ann.tokens) {
        if (t.is_entity || t.is_numeric) continue;
        if (t.pos == Pos::Noun || t.pos == Pos::Verb) kept.push_back(ascii_lower(t.text));
    }
    if (kept.empty()) return "an image";
    return join(kept, level == GeneralityLevel::FiveWord ? 5 : std::string::npos);
}

std::string MockChatClient::complete(const std::string&, const std::string& prompt) {
    ++calls_;
    if (starts_with(prompt, kGeneralPrefix) && ends_with(prompt, kGeneralSuffix)) {
        auto caption = std::string_view(prompt).substr(kGeneralPrefix.size());
        caption.remove_suffix(kGeneralSuffix.size());
        return mock_generalize(caption, GeneralityLevel::General, lexicon_);
    }
    if (starts_with(prompt, kFiveWordPrefix) && ends_with(prompt, kFiveWordSuffix)) {
        auto caption = std::string_view(prompt).substr(kFiveWordPrefix.size());
        caption.remove_suffix(kFiveWordSuffix.size());
        return mock_generalize(caption, GeneralityLevel::FiveWord, lexicon_);
    }
    throw ProviderError("mock client does not recognize the prompt");
}

// ---------------------------------------------------------------------------
// Cache

std::uint64_t ResponseCache::key(GeneralityLevel level, std::string_view caption, std::string_view model) {
    auto h = fnv1a64(to_string(level));
    h = fnv1a64("\x1f", h);
    h = fnv1a64(caption, h);
    h = fnv1a64("\x1f", h);
    return fnv1a64(model, h);
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;  // starts empty; created on first put
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            Entry e{j.at("level").get<std::string>(), j.at("caption").get<std::string>(),
                    j.at("model").get<std::string>(), j.at("response").get<std::string>()};
            const auto k = key(parse_generality_level(e.level), e.caption, e.model);
            entries_.emplace(k, std::move(e));
        } catch (const std::exception& ex) {
            throw ParseError(path_.string() + ":" + std::to_string(line_no) + ": bad cache line: " + ex.what());
        }
    }
}

std::optional<std::string> ResponseCache::get(GeneralityLevel level, const std::string& caption,
                                              const std::string& model) const {
    std::lock_guard lock(mutex_);
    auto [lo, hi] = entries_.equal_range(key(level, caption, model));
    std::optional<std::string> found;
    for (auto it = lo; it != hi; ++it)
        if (it->second.level == to_string(level) && it->second.caption == caption && it->second.model == model)
            found = it->second.response;  // last write wins
    return found;
}

void ResponseCache::put(GeneralityLevel level, const std::string& caption, const std::string& model,
                        const std::string& response) {
    std::lock_guard lock(mutex_);
    const auto k = key(level, caption, model);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(k));
    const nlohmann::json line = {
        {"key", hex},
        {"level", to_string(level)},
        {"caption", caption},
        {"model", model},
        {"response", response},
        {"timestamp", static_cast<std::int64_t>(std::time(nullptr))},
    };
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error("cannot append to cache " + path_.string());
    out << line.dump() << '\n';
    entries_.emplace(k, Entry{std::string(to_string(level)), caption, model, response});
}

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

// ---------------------------------------------------------------------------

std::string generalize_caption(ChatClient& client, ResponseCache* cache, const GeneralizeRequest& request) {
    if (request.caption.empty()) throw ContractError("generalize: empty caption");
    if (request.max_retries < 0) throw ContractError("generalize: max_retries must be >= 0");
    if (cache) {
        if (auto hit = cache->get(request.level, request.caption, request.model_name)) return *hit;
    }
    const auto prompt = build_prompt(request.caption, request.level);
    std::string result;
    for (int attempt = 0;; ++attempt) {
        result = clean_reply(client.complete(request.model_name, prompt));
        if (result.empty()) throw ProviderError("empty reply for caption '" + request.caption + "'");
        if (request.level != GeneralityLevel::FiveWord) break;
        const auto words = split_words(result);
        if (words.size() <= 5) break;
        if (attempt >= request.max_retries) {
            result = join(words, 5);
            break;
        }
    }
    if (cache) cache->put(request.level, request.caption, request.model_name, result);
    return result;
}

std::vector<nlohmann::json> batch_generalize(const std::vector<CaptionRecord>& records, GeneralityLevel level,
                                             ChatClient& client, ResponseCache* cache, const std::string& model_name,
                                             int max_retries) {
    std::vector<nlohmann::json> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        nlohmann::json j = {{"id", rec.id}, {"caption", rec.caption}};
        try {
            GeneralizeRequest req{rec.caption, level, model_name, max_retries};
            j["generalized"] = generalize_caption(client, cache, req);
        } catch (const Error& e) {
            j["error"] = e.what();
        }
        out.push_back(std::move(j));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<std::string> mock_paraphrases(std::string_view caption, std::size_t count) {
    static constexpr std::string_view kPrefixes[] = {"a picture of", "a photo of", "an image of", "a view of"};
    static constexpr std::string_view kSuffixes[] = {"in the scene", "on display", "shown here", "in view"};
    const auto words = tokenize(caption);
    std::vector<std::string> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        Rng rng(derive_seed(fnv1a64(caption), k));
        auto w = words;
        switch (rng.below(4)) {
            case 0:
                w.insert(w.begin(), std::string(kPrefixes[rng.below(std::size(kPrefixes))]));
                break;
            case 1:
                if (w.size() >= 2) w.erase(w.begin() + static_cast<std::ptrdiff_t>(rng.below(w.size())));
                break;
            case 2:
                if (w.size() >= 2) {
                    const auto i = rng.below(w.size() - 1);
                    std::swap(w[i], w[i + 1]);
                }
                break;
            default:
                w.emplace_back(kSuffixes[rng.below(std::size(kSuffixes))]);
                break;
        }
        auto s = join(w);
        out.push_back(s.empty() ? std::string("an image") : s);
    }
    return out;
}

}  // namespace replimit
