#include <doctest.h>

#include <fstream>
#include <map>
#include <mutex>

#include "sensy/error.hpp"
#include "sensy/interrogate.hpp"
#include "support/fixtures.hpp"
#include "support/mock_llm.hpp"

using namespace sensy;
using sensy::test::MockLlmServer;
using sensy::test::words;

namespace {

Dataset two_prompts() {
    Dataset ds;
    ds.prompts.push_back(sensy::test::make_prompt("q1", "Does god exist?"));
    ds.prompts.push_back(sensy::test::make_prompt("q2", "What is the meaning of life?"));
    return ds;
}

InterrogationConfig config_for(const MockLlmServer& server) {
    InterrogationConfig cfg;
    cfg.endpoint_url = server.url();
    cfg.model_id = "mock-model";
    cfg.timeout = std::chrono::milliseconds(5000);
    return cfg;
}

// Replies per user text, advancing through a per-prompt script; the last
// entry repeats once the script is exhausted.
MockLlmServer::ReplyFn scripted(std::map<std::string, std::vector<std::string>> script) {
    auto counts = std::make_shared<std::map<std::string, std::size_t>>();
    auto mutex = std::make_shared<std::mutex>();
    return [script = std::move(script), counts, mutex](std::size_t,
                                                       const std::string& user) {
        std::lock_guard lock(*mutex);
        const auto it = script.find(user);
        if (it == script.end()) return std::string("fallback answer");
        const std::size_t k = (*counts)[user]++;
        return it->second[std::min(k, it->second.size() - 1)];
    };
}

} // namespace

// ---------------------------------------------------------------------------
// Word counting and uncertainty detection
// ---------------------------------------------------------------------------

TEST_CASE("count_words: interrogation boundary at exactly 160 words") {
    CHECK(count_words("") == 0);
    CHECK(count_words("one  two\nthree") == 3);
    CHECK(count_words(words(160)) == 160);
    CHECK(count_words(words(161)) == 161);
}

TEST_CASE("detect_uncertain: default patterns") {
    const UncertainDetector detector(default_uncertain_patterns());
    CHECK(detect_uncertain("I cannot determine that", detector));
    CHECK(detect_uncertain("Well, I'm not sure at all.", detector));
    CHECK(detect_uncertain("AS AN AI model, ...", detector));
    CHECK_FALSE(detect_uncertain("Paris is the capital of France", detector));
}

TEST_CASE("detect_uncertain: empty pattern list never matches") {
    const UncertainDetector detector({});
    CHECK_FALSE(detect_uncertain("I cannot say", detector));
}

TEST_CASE("detect_uncertain: invalid pattern is a startup configuration error") {
    CHECK_THROWS_AS(UncertainDetector({"valid", "[unclosed"}), ConfigError);
}

// ---------------------------------------------------------------------------
// Protocol
// ---------------------------------------------------------------------------

TEST_CASE("interrogate_corpus: happy path emits reps x prompts records") {
    MockLlmServer server([](std::size_t, const std::string&) {
        return std::string("A short and direct answer.");
    });
    const auto records = interrogate_corpus(two_prompts(), config_for(server));

    REQUIRE(records.size() == 2);
    CHECK(records[0].prompt_id == "q1");
    CHECK(records[1].prompt_id == "q2");
    std::size_t responses = 0;
    for (const auto& record : records) {
        REQUIRE(record.responses.size() == 3);
        for (const auto& response : record.responses) {
            CHECK(response.status == ResponseStatus::ok);
            CHECK(response.attempts == 1);
            CHECK(response.word_count == 5);
            ++responses;
        }
    }
    CHECK(responses == 6);
    CHECK(server.request_count() == 6);
}

TEST_CASE("interrogate_corpus: over-length reply retried once then accepted") {
    MockLlmServer server(scripted({{"Does god exist?", {words(200), words(100)}},
                                   {"What is the meaning of life?", {words(10)}}}));
    auto cfg = config_for(server);

    const auto records = interrogate_corpus(two_prompts(), cfg);
    REQUIRE(records.size() == 2);
    const ResponseRecord& first = records[0].responses[0];
    CHECK(first.attempts == 2);
    CHECK(first.status == ResponseStatus::ok);
    CHECK(first.word_count == 100);
}

TEST_CASE("interrogate_corpus: persistent over-length reply exhausts attempts") {
    MockLlmServer server([](std::size_t, const std::string&) { return words(200); });
    auto cfg = config_for(server);
    Dataset ds;
    ds.prompts.push_back(sensy::test::make_prompt("q1", "hello"));

    const auto records = interrogate_corpus(ds, cfg);
    REQUIRE(records.size() == 1);
    REQUIRE(records[0].responses.size() == 3);
    for (const auto& response : records[0].responses) {
        CHECK(response.attempts == 3);
        CHECK(response.status == ResponseStatus::length_exceeded);
        CHECK(response.word_count == 200); // last reply retained
        CHECK(response.text == words(200));
    }
    CHECK(server.request_count() == 9); // 3 slots x 3 attempts
}

TEST_CASE("interrogate_corpus: uncertain replies retried and recorded") {
    MockLlmServer server(scripted({{"hello", {"I cannot answer that", "Here you go."}}}));
    auto cfg = config_for(server);
    cfg.repetitions = 1;
    Dataset ds;
    ds.prompts.push_back(sensy::test::make_prompt("q1", "hello"));

    const auto records = interrogate_corpus(ds, cfg);
    const ResponseRecord& r = records[0].responses[0];
    CHECK(r.attempts == 2);
    CHECK(r.status == ResponseStatus::ok);
    CHECK(r.text == "Here you go.");
}

TEST_CASE("interrogate_corpus: endpoint down at start is fatal") {
    InterrogationConfig cfg;
    cfg.endpoint_url = "http://127.0.0.1:1"; // nothing listens here
    cfg.model_id = "mock";
    cfg.timeout = std::chrono::milliseconds(200);
    CHECK_THROWS_AS(interrogate_corpus(two_prompts(), cfg), TransportError);
}

TEST_CASE("interrogate_corpus: byte-identical output across runs") {
    MockLlmServer server(scripted({{"Does god exist?", {words(200), "Concise reply."}},
                                   {"What is the meaning of life?", {"Forty-two."}}}));
    auto cfg = config_for(server);

    const std::string a = interrogation_to_json(interrogate_corpus(two_prompts(), cfg));

    MockLlmServer server2(scripted({{"Does god exist?", {words(200), "Concise reply."}},
                                    {"What is the meaning of life?", {"Forty-two."}}}));
    auto cfg2 = config_for(server2);
    const std::string b = interrogation_to_json(interrogate_corpus(two_prompts(), cfg2));
    CHECK(a == b);
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

TEST_CASE("interrogation input: id/text/category records") {
    const auto path = sensy::test::temp_path("interrogation_input.json");
    {
        std::ofstream out(path);
        out << R"([
            {"id":"a","text":"Does god exist?","category":"ReligionPhilosophy"},
            {"id":"b","text":"plain question","category":""}
        ])";
    }
    const Dataset ds = load_interrogation_input(path);
    REQUIRE(ds.prompts.size() == 2);
    CHECK(ds.prompts[0].categories == std::set<Category>{Category::ReligionPhilosophy});
    CHECK(ds.prompts[0].label == Label::sensitive);
    CHECK(ds.prompts[1].categories.empty());
    CHECK_FALSE(ds.prompts[1].label.has_value());
}

TEST_CASE("interrogation records: JSON round-trip") {
    std::vector<InterrogationRecord> records;
    InterrogationRecord r;
    r.prompt_id = "p1";
    r.model_id = "m";
    r.responses.push_back(ResponseRecord{"fine", 1, 1, ResponseStatus::ok});
    r.responses.push_back(ResponseRecord{"", 0, 3, ResponseStatus::transport_error});
    r.responses.push_back(ResponseRecord{words(200), 200, 3, ResponseStatus::length_exceeded});
    records.push_back(r);

    const std::string json = interrogation_to_json(records);
    const auto parsed = parse_interrogation_json(json);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].prompt_id == "p1");
    REQUIRE(parsed[0].responses.size() == 3);
    CHECK(parsed[0].responses[0].status == ResponseStatus::ok);
    CHECK(parsed[0].responses[1].status == ResponseStatus::transport_error);
    CHECK(parsed[0].responses[2].status == ResponseStatus::length_exceeded);
    CHECK(parsed[0].responses[2].word_count == 200);
    CHECK(interrogation_to_json(parsed) == json);
}

TEST_CASE("interrogate_corpus: width-2 pool preserves order and content") {
    auto reply = [](std::size_t, const std::string& user) {
        return "Echo: " + user;
    };
    Dataset ds;
    for (int i = 0; i < 8; ++i) {
        ds.prompts.push_back(
            sensy::test::make_prompt("q" + std::to_string(i), "question " + std::to_string(i)));
    }

    MockLlmServer server_seq(reply);
    auto cfg_seq = config_for(server_seq);
    const std::string sequential = interrogation_to_json(interrogate_corpus(ds, cfg_seq));

    MockLlmServer server_par(reply);
    auto cfg_par = config_for(server_par);
    cfg_par.concurrency = 2;
    const std::string parallel = interrogation_to_json(interrogate_corpus(ds, cfg_par));

    CHECK(parallel == sequential);
}
