#include <atomic>
#include <thread>

#include "doctest.h"
#include "httplib.h"

#include "replimit/errors.hpp"
#include "replimit/generalize.hpp"
#include "replimit/genmetrics.hpp"
#include "replimit/rng.hpp"
#include "support/support.hpp"

using namespace replimit;
using namespace std::chrono_literals;

namespace {

const Lexicon& lexicon() {
    static const Lexicon lex = testsupport::make_lexicon(
        {{"dog", 18, 8.0}, {"roller", 2, 7.0}, {"head", 9, 5.0}, {"pipe", 6, 7.0}, {"stand", 5, 6.0}, {"ton", 1, 5.0},
         {"park", 3, 6.0}, {"man", 12, 6.0}},
        10.0, 6.0);
    return lex;
}

class ScriptedClient : public ChatClient {
public:
    explicit ScriptedClient(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    std::string complete(const std::string&, const std::string& prompt) override {
        prompts.push_back(prompt);
        const auto& r = replies_[std::min(calls, replies_.size() - 1)];
        ++calls;
        return r;
    }
    std::size_t calls = 0;
    std::vector<std::string> prompts;

private:
    std::vector<std::string> replies_;
};

bool has_digit(const std::string& s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

TEST_SUITE("generalize") {
    TEST_CASE("prompt templates are byte exact") {
        CHECK(build_prompt("a red dog", GeneralityLevel::General) ==
              "Convert this caption of an image to a more general caption:a red dog;");
        CHECK(build_prompt("a red dog", GeneralityLevel::FiveWord) ==
              "Make this caption of an image extremely general (result in less than 5 words): a red dog.");
        CHECK_THROWS_AS(build_prompt("", GeneralityLevel::General), ContractError);
    }

    TEST_CASE("level names") {
        CHECK(parse_generality_level("general") == GeneralityLevel::General);
        CHECK(parse_generality_level("five-word") == GeneralityLevel::FiveWord);
        CHECK(to_string(GeneralityLevel::FiveWord) == "five-word");
        CHECK_THROWS_AS(parse_generality_level("vague"), ContractError);
    }

    TEST_CASE("mock generalizer rules") {
        const auto five = mock_generalize("2-Ton Multi-Directional Roller Head Pipe Welding Stands",
                                          GeneralityLevel::FiveWord, lexicon());
        CHECK(split_words(five).size() <= 5);
        CHECK_FALSE(has_digit(five));
        CHECK(five == ascii_lower(five));

        const auto g = mock_generalize("Johnson went to USC at 10 am", GeneralityLevel::General, lexicon());
        CHECK(g.find("johnson") == std::string::npos);
        CHECK(g.find("usc") == std::string::npos);
        CHECK_FALSE(has_digit(g));

        CHECK(mock_generalize("a dog", GeneralityLevel::FiveWord, lexicon()) == "dog");
        CHECK(mock_generalize("10 20 30", GeneralityLevel::General, lexicon()) == "an image");
    }

    TEST_CASE("mock SI never drops below the original") {
        static const std::vector<std::string> vocab{"the", "dog", "Johnson", "USC", "10", "runs", "park", "in",
                                                    "Paris", "man", "walks", "three", "at", "Monday"};
        Rng rng(2);
        for (int i = 0; i < 300; ++i) {
            std::string text;
            const auto n = 1 + rng.below(8);
            for (std::uint64_t k = 0; k < n; ++k) text += (k ? " " : "") + vocab[rng.below(vocab.size())];
            const auto original = annotate(text, lexicon());
            if (original.n_word == 0) continue;
            const auto out = mock_generalize(text, GeneralityLevel::General, lexicon());
            const auto mocked = annotate(out, lexicon());
            REQUIRE(mocked.n_word > 0);
            CHECK(si_score(mocked) >= si_score(original));
            CHECK(mock_generalize(text, GeneralityLevel::General, lexicon()) == out);
        }
    }

    TEST_CASE("mock client parses its prompts back") {
        MockChatClient client(lexicon());
        CHECK(client.complete("m", build_prompt("a dog", GeneralityLevel::FiveWord)) == "dog");
        CHECK_THROWS_AS(client.complete("m", "hello"), ProviderError);
    }

    TEST_CASE("reply cleaning") {
        CHECK(clean_reply("  \"A dog.\"  ") == "A dog.");
        CHECK(clean_reply("'x'") == "x");
        CHECK(clean_reply("\xE2\x80\x9C" "a cat" "\xE2\x80\x9D") == "a cat");
        CHECK(clean_reply("plain") == "plain");
    }

    TEST_CASE("five-word replies are retried then truncated") {
        ScriptedClient client({"one two three four five six seven"});
        GeneralizeRequest req{"a dog in a park", GeneralityLevel::FiveWord, "m", 0};
        CHECK(generalize_caption(client, nullptr, req) == "one two three four five");
        CHECK(client.calls == 1);

        ScriptedClient retry({"one two three four five six", "a dog"});
        req.max_retries = 2;
        CHECK(generalize_caption(retry, nullptr, req) == "a dog");
        CHECK(retry.calls == 2);

        ScriptedClient empty({"  "});
        CHECK_THROWS_AS(generalize_caption(empty, nullptr, req), ProviderError);
    }

    TEST_CASE("cache hit avoids the client and survives reload") {
        testsupport::TempDir dir;
        const auto path = dir / "cache.jsonl";
        GeneralizeRequest req{"a dog", GeneralityLevel::General, "m", 1};
        {
            ResponseCache cache(path);
            ScriptedClient client({"an animal"});
            CHECK(generalize_caption(client, &cache, req) == "an animal");
            CHECK(generalize_caption(client, &cache, req) == "an animal");
            CHECK(client.calls == 1);
        }
        ResponseCache reloaded(path);
        ScriptedClient unused({"other"});
        CHECK(generalize_caption(unused, &reloaded, req) == "an animal");
        CHECK(unused.calls == 0);
        req.model_name = "m2";
        CHECK(generalize_caption(unused, &reloaded, req) == "other");
        CHECK(ResponseCache::key(GeneralityLevel::General, "a", "m") ==
              ResponseCache::key(GeneralityLevel::General, "a", "m"));
        CHECK(ResponseCache::key(GeneralityLevel::General, "a", "m") !=
              ResponseCache::key(GeneralityLevel::FiveWord, "a", "m"));
    }

    TEST_CASE("batch keeps order and records failures per item") {
        MockChatClient client(lexicon());
        std::vector<CaptionRecord> recs{{"x", "a dog", ""}, {"y", "", ""}, {"z", "Johnson in the park", ""}};
        const auto out = batch_generalize(recs, GeneralityLevel::General, client, nullptr);
        REQUIRE(out.size() == 3);
        CHECK(out[0]["id"] == "x");
        CHECK(out[0]["generalized"] == "dog");
        CHECK(out[1].contains("error"));
        CHECK(out[2]["id"] == "z");

        testsupport::TempDir dir;
        ResponseCache cache(dir / "c.jsonl");
        const auto first = batch_generalize(recs, GeneralityLevel::FiveWord, client, &cache);
        const auto calls = client.calls();
        const auto second = batch_generalize(recs, GeneralityLevel::FiveWord, client, &cache);
        CHECK(client.calls() == calls);
        CHECK(nlohmann::json(first).dump() == nlohmann::json(second).dump());
    }

    TEST_CASE("paraphrases are deterministic and sized") {
        const auto a = mock_paraphrases("red circle at 3,4 radius 2", 20);
        CHECK(a.size() == 20);
        CHECK(a == mock_paraphrases("red circle at 3,4 radius 2", 20));
        for (const auto& p : a) CHECK_FALSE(p.empty());
    }

    TEST_CASE("reply text extraction") {
        CHECK(extract_reply_text(nlohmann::json::parse(R"({"choices":[{"message":{"content":"hi"}}]})")) == "hi");
        CHECK(extract_reply_text(nlohmann::json::parse(R"({"choices":[{"text":"yo"}]})")) == "yo");
        CHECK(extract_reply_text(nlohmann::json::parse(R"({"content":[{"type":"text","text":"ok"}]})")) == "ok");
        CHECK_THROWS_AS(extract_reply_text(nlohmann::json::parse("{}")), ProviderError);
    }

    TEST_CASE("HTTP client against a local server") {
        httplib::Server server;
        std::atomic<int> hits{0};
        std::string seen_auth, seen_body;
        server.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
            const int n = ++hits;
            if (n == 1) {
                res.status = 503;
                return;
            }
            seen_auth = req.get_header_value("Authorization");
            seen_body = req.body;
            res.set_content(R"({"choices":[{"message":{"content":"\"a general dog\""}}]})", "application/json");
        });
        server.Post("/bad", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
        const int port = server.bind_to_any_port("127.0.0.1");
        std::thread thread([&] { server.listen_after_bind(); });
        server.wait_until_ready();

        HttpClientConfig cfg;
        cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat";
        cfg.api_key = "secret";
        cfg.inter_request_delay = 1ms;
        cfg.backoff_base = 1ms;
        cfg.timeout = 5s;
        HttpChatClient client(cfg);
        GeneralizeRequest req{"a dog", GeneralityLevel::General, "model-x", 0};
        CHECK(generalize_caption(client, nullptr, req) == "a general dog");
        CHECK(hits == 2);
        CHECK(client.requests_sent() == 2);
        CHECK(seen_auth == "Bearer secret");
        const auto body = nlohmann::json::parse(seen_body);
        CHECK(body["model"] == "model-x");
        CHECK(body["messages"][0]["role"] == "user");
        CHECK(body["messages"][0]["content"] == build_prompt("a dog", GeneralityLevel::General));

        cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/bad";
        HttpChatClient bad(cfg);
        CHECK_THROWS_AS(bad.complete("m", "p"), ProviderError);

        server.stop();
        thread.join();

        cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat";
        cfg.transport_retries = 1;
        HttpChatClient down(cfg);
        CHECK_THROWS_AS(down.complete("m", "p"), NetworkError);
        CHECK_THROWS_AS(HttpChatClient(HttpClientConfig{"localhost/no-scheme"}), ContractError);
    }
}
