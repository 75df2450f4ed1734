#include <doctest.h>

#include <cmath>
#include <random>

#include "sensy/error.hpp"
#include "sensy/features.hpp"
#include "support/fixtures.hpp"
#include "support/mock_llm.hpp"

using namespace sensy;

namespace {

KeywordIndex religion_index() {
    return KeywordIndex::from_map(
        {{Category::ReligionPhilosophy, {"god", "religion"}}});
}

double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace

// ---------------------------------------------------------------------------
// POS lexicon and syntactic features
// ---------------------------------------------------------------------------

TEST_CASE("shipped pos lexicon: size and fallback rules") {
    const PosLexicon lex = sensy::test::shipped_pos_lexicon();
    CHECK(lex.size() >= 5000);

    CHECK(lex.tag("the") == PosTag::other);
    CHECK(lex.tag("big") == PosTag::adjective);
    CHECK(lex.tag("dog") == PosTag::noun);
    CHECK(lex.tag("runs") == PosTag::verb);

    // Out-of-lexicon suffix fallbacks.
    CHECK(lex.tag("zorply") == PosTag::other);
    CHECK(lex.tag("zorping") == PosTag::verb);
    CHECK(lex.tag("zorped") == PosTag::verb);
    CHECK(lex.tag("zorpous") == PosTag::adjective);
    CHECK(lex.tag("zorpful") == PosTag::adjective);
    CHECK(lex.tag("zorpive") == PosTag::adjective);
    CHECK(lex.tag("zorp") == PosTag::noun);
}

TEST_CASE("syntactic_features: empty token list is all zeros") {
    const auto f = syntactic_features({}, religion_index(), sensy::test::shipped_pos_lexicon());
    CHECK(f.unique_words == 0);
    CHECK(f.verbs == 0);
    CHECK(f.adjectives == 0);
    CHECK(f.nouns == 0);
    CHECK(f.sensitive_keywords == 0);
}

TEST_CASE("syntactic_features: hand-tagged sentence") {
    const auto f = syntactic_features(tokenize("the big dog runs"), religion_index(),
                                      sensy::test::shipped_pos_lexicon());
    CHECK(f.unique_words == 4);
    CHECK(f.verbs == 1);
    CHECK(f.adjectives == 1);
    CHECK(f.nouns == 1);
    CHECK(f.sensitive_keywords == 0);
}

TEST_CASE("syntactic_features: keyword occurrences counted, not unique") {
    const auto f = syntactic_features(tokenize("god god religion"), religion_index(),
                                      sensy::test::shipped_pos_lexicon());
    CHECK(f.sensitive_keywords == 3);
    CHECK(f.unique_words == 2);
}

TEST_CASE("syntactic_features: invariant under token permutation") {
    const PosLexicon lex = sensy::test::shipped_pos_lexicon();
    const KeywordIndex index = sensy::test::shipped_keywords();
    auto tokens = tokenize("the quick brown fox jumps over the lazy dog near god");
    const auto base = syntactic_features(tokens, index, lex);

    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(tokens.begin(), tokens.end(), rng);
        const auto shuffled = syntactic_features(tokens, index, lex);
        CHECK(shuffled.unique_words == base.unique_words);
        CHECK(shuffled.verbs == base.verbs);
        CHECK(shuffled.adjectives == base.adjectives);
        CHECK(shuffled.nouns == base.nouns);
        CHECK(shuffled.sensitive_keywords == base.sensitive_keywords);
    }
}

TEST_CASE("syntactic_features: appending a keyword never decreases the count") {
    const PosLexicon lex = sensy::test::shipped_pos_lexicon();
    const KeywordIndex index = religion_index();
    std::string text = "some ordinary text";
    std::size_t previous = 0;
    for (int i = 0; i < 5; ++i) {
        const auto f = syntactic_features(tokenize(text), index, lex);
        CHECK(f.sensitive_keywords >= previous);
        previous = f.sensitive_keywords;
        text += " god";
    }
    CHECK(previous == 4);
}

// ---------------------------------------------------------------------------
// Sentiment
// ---------------------------------------------------------------------------

TEST_CASE("sentiment_scores: empty text is fully neutral") {
    const auto s = sentiment_scores("", sensy::test::shipped_valence_lexicon());
    CHECK(s.positive == 0.0);
    CHECK(s.negative == 0.0);
    CHECK(s.neutral == 1.0);
}

TEST_CASE("sentiment_scores: all-positive text dominates") {
    const auto s = sentiment_scores("good great excellent wonderful",
                                    sensy::test::shipped_valence_lexicon());
    CHECK(s.positive > s.negative);
    CHECK(s.positive > s.neutral);
}

TEST_CASE("sentiment_scores: valence-free sentence is neutral") {
    const auto s =
        sentiment_scores("the report is on the desk", sensy::test::shipped_valence_lexicon());
    CHECK(s.positive == 0.0);
    CHECK(s.negative == 0.0);
    CHECK(s.neutral == 1.0);
}

TEST_CASE("sentiment_scores: components in range and sum to one") {
    const ValenceLexicon lex = sensy::test::shipped_valence_lexicon();
    const std::vector<std::string> texts = {
        "good bad", "hate hate hate love", "nothing to see here",
        "terrible awful day but great food", "war and peace",
    };
    for (const auto& text : texts) {
        CAPTURE(text);
        const auto s = sentiment_scores(text, lex);
        CHECK(s.positive >= 0.0);
        CHECK(s.positive <= 1.0);
        CHECK(s.negative >= 0.0);
        CHECK(s.negative <= 1.0);
        CHECK(s.neutral >= 0.0);
        CHECK(s.neutral <= 1.0);
        CHECK(std::abs(s.positive + s.negative + s.neutral - 1.0) < 1e-9);
    }
}

// ---------------------------------------------------------------------------
// Hashing embedder
// ---------------------------------------------------------------------------

TEST_CASE("hashing embedder: deterministic") {
    HashingEmbedder embedder(256, 0);
    const auto a = embedder.embed("what is the meaning of life");
    const auto b = embedder.embed("what is the meaning of life");
    CHECK(a.values == b.values);
    CHECK(a.provider_id == b.provider_id);
}

TEST_CASE("hashing embedder: unit norm for non-empty text") {
    HashingEmbedder embedder(256, 0);
    for (const auto* text : {"hello", "one two three", "a much longer sentence with many words"}) {
        CAPTURE(text);
        CHECK(std::abs(l2_norm(embedder.embed(text).values) - 1.0) < 1e-9);
    }
}

TEST_CASE("hashing embedder: empty text embeds to the zero vector") {
    HashingEmbedder embedder(64, 0);
    const auto e = embedder.embed("");
    CHECK(e.values.size() == 64);
    CHECK(l2_norm(e.values) == 0.0);
}

TEST_CASE("hashing embedder: seed changes the vector") {
    HashingEmbedder a(128, 0);
    HashingEmbedder b(128, 1);
    CHECK(a.embed("same text").values != b.embed("same text").values);
}

// ---------------------------------------------------------------------------
// Remote embedder
// ---------------------------------------------------------------------------

TEST_CASE("remote embedder: happy path against the mock endpoint") {
    sensy::test::MockEmbedServer server(8);
    RemoteEmbedderConfig cfg;
    cfg.url = server.url();
    cfg.model = "mock-embed";
    cfg.dimension = 8;
    RemoteEmbedder embedder(cfg);

    const auto vectors = embedder.embed_batch({"abc", "de"});
    REQUIRE(vectors.size() == 2);
    CHECK(vectors[0].size() == 8);
    CHECK(vectors[0][0] == 3.0);
    CHECK(vectors[1][0] == 2.0);
}

TEST_CASE("remote embedder: dimension mismatch is fatal") {
    sensy::test::MockEmbedServer server(7); // declares 8, returns 7
    RemoteEmbedderConfig cfg;
    cfg.url = server.url();
    cfg.model = "mock-embed";
    cfg.dimension = 8;
    RemoteEmbedder embedder(cfg);
    CHECK_THROWS_AS(embedder.embed("abc"), DimensionMismatchError);
}

TEST_CASE("remote embedder: unreachable endpoint fails after bounded retries") {
    RemoteEmbedderConfig cfg;
    cfg.url = "http://127.0.0.1:1/v1/embeddings"; // nothing listens on port 1
    cfg.model = "mock-embed";
    cfg.dimension = 4;
    cfg.max_retries = 2;
    cfg.timeout = std::chrono::milliseconds(200);
    RemoteEmbedder embedder(cfg);
    CHECK_THROWS_AS(embedder.embed("abc"), TransportError);
}

// ---------------------------------------------------------------------------
// Featurizer
// ---------------------------------------------------------------------------

TEST_CASE("featurize: empty text is the degenerate composition") {
    const Featurizer featurizer = sensy::test::make_featurizer(16);
    const auto v = featurizer.featurize("");
    REQUIRE(v.size() == 16 + kScalarFeatureCount);
    for (std::size_t i = 0; i < 5; ++i) CHECK(v[i] == 0.0); // syntactic zeros
    CHECK(v[5] == 0.0);                                     // positive
    CHECK(v[6] == 0.0);                                     // negative
    CHECK(v[7] == 1.0);                                     // neutral
    for (std::size_t i = 8; i < v.size(); ++i) CHECK(v[i] == 0.0);
}

TEST_CASE("featurize: fallback d=256 gives a length-264 vector") {
    const Featurizer featurizer = sensy::test::make_featurizer(256);
    CHECK(featurizer.featurize("any prompt at all").size() == 264);
    CHECK(featurizer.dimension() == 264);
}

TEST_CASE("featurize: casing-insensitive under random perturbations") {
    const Featurizer featurizer = sensy::test::make_featurizer(64);
    const std::string base = "should i tell my therapist about this?";
    const auto expected = featurizer.featurize(base);

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        std::string perturbed = base;
        for (char& c : perturbed) {
            if (std::isalpha(static_cast<unsigned char>(c)) && rng() % 2 == 0) {
                c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            }
        }
        CHECK(featurizer.featurize(perturbed) == expected);
    }
}

TEST_CASE("featurize: repeated calls agree exactly") {
    const Featurizer featurizer = sensy::test::make_featurizer();
    const std::string text = "does god exist and should i worry about it";
    CHECK(featurizer.featurize(text) == featurizer.featurize(text));
}

TEST_CASE("featurize_all: matches per-prompt featurize") {
    const Featurizer featurizer = sensy::test::make_featurizer(32);
    Dataset ds;
    ds.prompts.push_back(sensy::test::make_prompt("a", "first text"));
    ds.prompts.push_back(sensy::test::make_prompt("b", "second text about god"));
    ds.prompts.push_back(sensy::test::make_prompt("c", "third"));
    const auto all = featurizer.featurize_all(ds);
    REQUIRE(all.size() == 3);
    for (std::size_t i = 0; i < ds.prompts.size(); ++i) {
        CHECK(all[i] == featurizer.featurize(ds.prompts[i].text));
    }
}

TEST_CASE("remote embedder config: environment variables override") {
    setenv("SENSY_EMBED_URL", "http://example.test/v1/embeddings", 1);
    setenv("SENSY_EMBED_TOKEN", "secret-token", 1);
    RemoteEmbedderConfig base;
    base.model = "m";
    base.dimension = 4;
    const auto cfg = RemoteEmbedderConfig::from_env(base);
    CHECK(cfg.url == "http://example.test/v1/embeddings");
    CHECK(cfg.auth_token == "secret-token");
    unsetenv("SENSY_EMBED_URL");
    unsetenv("SENSY_EMBED_TOKEN");

    const auto plain = RemoteEmbedderConfig::from_env(base);
    CHECK(plain.url.empty());
}
