#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sensy/corpus.hpp"
#include "sensy/text.hpp"

namespace sensy {

// ---------------------------------------------------------------------------
// Syntactic features
// ---------------------------------------------------------------------------

struct SyntacticFeatures {
    std::size_t unique_words = 0;
    std::size_t verbs = 0;
    std::size_t adjectives = 0;
    std::size_t nouns = 0;
    std::size_t sensitive_keywords = 0;
};

enum class PosTag { noun, verb, adjective, other };

// Word -> part-of-speech lookup backed by the bundled lexicon file
// (word<TAB>tag, tags NOUN/VERB/ADJ/OTHER). Unknown words fall back to
// suffix rules: -ly -> OTHER, -ing/-ed -> VERB, -ous/-ful/-ive -> ADJ,
// else NOUN.
class PosLexicon {
public:
    PosLexicon() = default;
    static PosLexicon load(const std::filesystem::path& path);

    PosTag tag(const std::string& token) const;
    std::size_t size() const { return entries_.size(); }

private:
    std::unordered_map<std::string, PosTag> entries_;
};

SyntacticFeatures syntactic_features(const std::vector<std::string>& tokens,
                                     const KeywordIndex& index,
                                     const PosLexicon& pos);

// ---------------------------------------------------------------------------
// Sentiment
// ---------------------------------------------------------------------------

struct SentimentScores {
    double positive = 0.0;
    double negative = 0.0;
    double neutral = 1.0;
};

// Word -> valence in [-1, 1], loaded from word<TAB>valence lines.
class ValenceLexicon {
public:
    ValenceLexicon() = default;
    static ValenceLexicon load(const std::filesystem::path& path);

    std::optional<double> valence(const std::string& token) const;
    std::size_t size() const { return entries_.size(); }

private:
    std::unordered_map<std::string, double> entries_;
};

// Lexicon mass scoring: matched tokens contribute |valence| to the positive
// or negative mass, unmatched tokens count toward neutral; the three masses
// are normalized to sum to 1. Empty or fully weightless text -> (0, 0, 1).
SentimentScores sentiment_scores(const std::string& text, const ValenceLexicon& lexicon);

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

struct Embedding {
    std::vector<double> values;
    std::string provider_id;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t dimension() const = 0;
    virtual std::string id() const = 0;

    // One vector per input text, each of length dimension().
    virtual std::vector<std::vector<double>> embed_batch(
        const std::vector<std::string>& texts) = 0;

    // Single-text convenience; enforces the declared dimension.
    Embedding embed(const std::string& text);
};

// Offline fallback: seeded signed hashing of unigrams and bigrams into a
// fixed number of buckets, L2-normalized. Fully deterministic.
class HashingEmbedder final : public EmbeddingProvider {
public:
    explicit HashingEmbedder(std::size_t dim = 256, std::uint64_t seed = 0);

    std::size_t dimension() const override { return dim_; }
    std::string id() const override;
    std::vector<std::vector<double>> embed_batch(
        const std::vector<std::string>& texts) override;

    std::vector<double> embed_one(const std::string& text) const;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

struct RemoteEmbedderConfig {
    std::string url;        // embeddings endpoint, e.g. http://host:port/v1/embeddings
    std::string model;
    std::string auth_token; // sent as Bearer when non-empty
    std::size_t dimension = 0;
    int max_retries = 3;
    std::size_t batch_size = 64;
    std::size_t max_concurrency = 2; // cap on in-flight requests
    std::chrono::milliseconds timeout{30000};

    // Fills url/auth_token from SENSY_EMBED_URL / SENSY_EMBED_TOKEN when set.
    static RemoteEmbedderConfig from_env(RemoteEmbedderConfig base);
    static RemoteEmbedderConfig from_env() { return from_env(RemoteEmbedderConfig{}); }
};

// POST {"input": [texts], "model": id} -> {"data": [{"embedding": [...]}]}.
// Transport failures retry up to max_retries; a response vector that
// contradicts the declared dimension is fatal.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    explicit RemoteEmbedder(RemoteEmbedderConfig config);

    std::size_t dimension() const override { return config_.dimension; }
    std::string id() const override;
    std::vector<std::vector<double>> embed_batch(
        const std::vector<std::string>& texts) override;

private:
    std::vector<std::vector<double>> request_chunk(const std::vector<std::string>& texts);

    RemoteEmbedderConfig config_;
};

// ---------------------------------------------------------------------------
// Featurizer
// ---------------------------------------------------------------------------

inline constexpr std::size_t kScalarFeatureCount = 8; // 5 syntactic + 3 sentiment

// Fixed feature layout: [unique_words, verbs, adjectives, nouns,
// sensitive_keywords, positive, negative, neutral, embedding...].
class Featurizer {
public:
    Featurizer(KeywordIndex index, PosLexicon pos, ValenceLexicon valence,
               std::shared_ptr<EmbeddingProvider> provider);

    std::size_t dimension() const { return provider_->dimension() + kScalarFeatureCount; }
    const KeywordIndex& keyword_index() const { return index_; }
    EmbeddingProvider& provider() const { return *provider_; }

    std::vector<double> featurize(const std::string& text) const;
    std::vector<double> featurize(const Prompt& prompt) const;

    // Featurizes every prompt; embeddings are fetched in provider batches and
    // the scalar features are computed in parallel.
    std::vector<std::vector<double>> featurize_all(const Dataset& ds) const;

private:
    std::vector<double> assemble(const std::string& text,
                                 std::vector<double> embedding) const;

    KeywordIndex index_;
    PosLexicon pos_;
    ValenceLexicon valence_;
    std::shared_ptr<EmbeddingProvider> provider_;
};

} // namespace sensy
