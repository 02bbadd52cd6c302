#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "replimit/genmetrics.hpp"
#include "replimit/lexicon.hpp"

namespace replimit {

enum class GeneralityLevel { General, FiveWord };

std::string_view to_string(GeneralityLevel level);  // "general" | "five-word"
GeneralityLevel parse_generality_level(std::string_view s);

struct GeneralizeRequest {
    std::string caption;
    GeneralityLevel level = GeneralityLevel::General;
    std::string model_name = "gpt-3.5-turbo";
    int max_retries = 2;
};

// The two instruction templates, with the caption substituted verbatim.
std::string build_prompt(std::string_view caption, GeneralityLevel level);

// Chat-completion transport. complete() returns the first text segment of the
// reply; it throws NetworkError or ProviderError.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete(const std::string& model_name, const std::string& prompt) = 0;
};

struct HttpClientConfig {
    std::string url;      // full endpoint URL, e.g. http://localhost:8000/v1/chat/completions
    std::string api_key;  // sent as a bearer token when non-empty
    std::chrono::milliseconds inter_request_delay{200};
    std::chrono::milliseconds backoff_base{500};
    int transport_retries = 3;
    std::chrono::seconds timeout{60};

    // REPLIMIT_LLM_URL / REPLIMIT_LLM_KEY. Throws ContractError when the URL is unset.
    static HttpClientConfig from_environment();
};

// POSTs {"model", "messages":[{"role":"user","content":prompt}]} and reads
// choices[0].message.content, or content[0].text for providers using that shape.
class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(HttpClientConfig config);
    std::string complete(const std::string& model_name, const std::string& prompt) override;
    int requests_sent() const { return requests_sent_; }

private:
    HttpClientConfig config_;
    std::string origin_;  // scheme://host:port
    std::string path_;
    std::optional<std::chrono::steady_clock::time_point> last_request_;
    int requests_sent_ = 0;
};

// Reply text extracted from a chat-completion response body.
std::string extract_reply_text(const nlohmann::json& body);

// Offline generalizer: drops entity and numeric tokens, keeps NOUN/VERB tokens in
// order, lower-cases; FIVE_WORD keeps the first five. Falls back to "an image".
std::string mock_generalize(std::string_view caption, GeneralityLevel level, const Lexicon& lexicon);

// ChatClient that recognizes the two prompt templates and answers with mock_generalize.
class MockChatClient : public ChatClient {
public:
    explicit MockChatClient(const Lexicon& lexicon) : lexicon_(lexicon) {}
    std::string complete(const std::string& model_name, const std::string& prompt) override;
    int calls() const { return calls_; }

private:
    const Lexicon& lexicon_;
    int calls_ = 0;
};

// Append-only JSONL response cache keyed by a 64-bit hash of (level, caption, model).
// The full key tuple is stored with each line and compared on lookup.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path path);

    std::optional<std::string> get(GeneralityLevel level, const std::string& caption, const std::string& model) const;
    void put(GeneralityLevel level, const std::string& caption, const std::string& model, const std::string& response);
    std::size_t size() const;

    static std::uint64_t key(GeneralityLevel level, std::string_view caption, std::string_view model);

private:
    struct Entry {
        std::string level, caption, model, response;
    };
    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::multimap<std::uint64_t, Entry> entries_;
};

// Strips surrounding whitespace and one layer of matching quotes.
std::string clean_reply(std::string_view reply);
std::vector<std::string> split_words(std::string_view s);

// Cache lookup, then request with FIVE_WORD length retries and truncation.
std::string generalize_caption(ChatClient& client, ResponseCache* cache, const GeneralizeRequest& request);

// One output object per input record, in order: {id, caption, generalized} or {id, caption, error}.
std::vector<nlohmann::json> batch_generalize(const std::vector<CaptionRecord>& records, GeneralityLevel level,
                                             ChatClient& client, ResponseCache* cache,
                                             const std::string& model_name = "gpt-3.5-turbo", int max_retries = 2);

// Deterministic caption paraphrases standing in for captioner-generated
// alternates (multiple-captions mitigation).
std::vector<std::string> mock_paraphrases(std::string_view caption, std::size_t count = 20);

}  // namespace replimit
