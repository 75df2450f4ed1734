#include "sensy/features.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "sensy/error.hpp"
#include "sensy/random.hpp"

namespace sensy {

using nlohmann::json;

// ---------------------------------------------------------------------------
// PosLexicon
// ---------------------------------------------------------------------------

namespace {

std::optional<PosTag> pos_tag_from_string(std::string_view s) {
    if (s == "NOUN") return PosTag::noun;
    if (s == "VERB") return PosTag::verb;
    if (s == "ADJ") return PosTag::adjective;
    if (s == "OTHER") return PosTag::other;
    return std::nullopt;
}

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

PosLexicon PosLexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("pos lexicon: cannot open " + path.string());
    }
    PosLexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError("pos lexicon: " + path.string() + ":" + std::to_string(line_no) +
                             ": expected word<TAB>tag");
        }
        const std::string word = to_lower(std::string_view(line).substr(0, tab));
        const auto tag = pos_tag_from_string(trim(std::string_view(line).substr(tab + 1)));
        if (word.empty() || !tag) {
            throw ParseError("pos lexicon: " + path.string() + ":" + std::to_string(line_no) +
                             ": bad entry \"" + line + "\"");
        }
        lex.entries_.emplace(word, *tag);
    }
    return lex;
}

PosTag PosLexicon::tag(const std::string& token) const {
    const auto it = entries_.find(token);
    if (it != entries_.end()) return it->second;
    // Suffix fallback for out-of-lexicon words.
    if (ends_with(token, "ly")) return PosTag::other;
    if (ends_with(token, "ing") || ends_with(token, "ed")) return PosTag::verb;
    if (ends_with(token, "ous") || ends_with(token, "ful") || ends_with(token, "ive")) {
        return PosTag::adjective;
    }
    return PosTag::noun;
}

SyntacticFeatures syntactic_features(const std::vector<std::string>& tokens,
                                     const KeywordIndex& index,
                                     const PosLexicon& pos) {
    SyntacticFeatures out;
    std::set<std::string_view> unique;
    for (const std::string& token : tokens) {
        unique.insert(token);
        switch (pos.tag(token)) {
        case PosTag::verb: ++out.verbs; break;
        case PosTag::adjective: ++out.adjectives; break;
        case PosTag::noun: ++out.nouns; break;
        case PosTag::other: break;
        }
        if (index.contains(token)) {
            ++out.sensitive_keywords; // occurrence count, not unique count
        }
    }
    out.unique_words = unique.size();
    return out;
}

// ---------------------------------------------------------------------------
// ValenceLexicon
// ---------------------------------------------------------------------------

ValenceLexicon ValenceLexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("valence lexicon: cannot open " + path.string());
    }
    ValenceLexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError("valence lexicon: " + path.string() + ":" +
                             std::to_string(line_no) + ": expected word<TAB>valence");
        }
        const std::string word = to_lower(std::string_view(line).substr(0, tab));
        double value = 0.0;
        try {
            value = std::stod(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw ParseError("valence lexicon: " + path.string() + ":" +
                             std::to_string(line_no) + ": bad valence");
        }
        if (word.empty() || value < -1.0 || value > 1.0) {
            throw ParseError("valence lexicon: " + path.string() + ":" +
                             std::to_string(line_no) + ": valence must be in [-1, 1]");
        }
        lex.entries_.emplace(word, value);
    }
    return lex;
}

std::optional<double> ValenceLexicon::valence(const std::string& token) const {
    const auto it = entries_.find(token);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

SentimentScores sentiment_scores(const std::string& text, const ValenceLexicon& lexicon) {
    double positive_mass = 0.0;
    double negative_mass = 0.0;
    double neutral_mass = 0.0;
    for (const std::string& token : tokenize(text)) {
        if (const auto v = lexicon.valence(token)) {
            positive_mass += std::max(*v, 0.0);
            negative_mass += std::max(-*v, 0.0);
        } else {
            neutral_mass += 1.0;
        }
    }
    const double total = positive_mass + negative_mass + neutral_mass;
    if (total <= 0.0) {
        return SentimentScores{0.0, 0.0, 1.0};
    }
    return SentimentScores{positive_mass / total, negative_mass / total,
                           neutral_mass / total};
}

// ---------------------------------------------------------------------------
// EmbeddingProvider
// ---------------------------------------------------------------------------

Embedding EmbeddingProvider::embed(const std::string& text) {
    auto vectors = embed_batch({text});
    if (vectors.size() != 1 || vectors[0].size() != dimension()) {
        throw DimensionMismatchError("embed: provider \"" + id() + "\" returned " +
                                     std::to_string(vectors.empty() ? 0 : vectors[0].size()) +
                                     " values, declared dimension is " +
                                     std::to_string(dimension()));
    }
    return Embedding{std::move(vectors[0]), id()};
}

// ---------------------------------------------------------------------------
// HashingEmbedder
// ---------------------------------------------------------------------------

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ splitmix64(seed);
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h);
}

} // namespace

HashingEmbedder::HashingEmbedder(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
    if (dim_ == 0) {
        throw ConfigError("hashing embedder: dimension must be positive");
    }
}

std::string HashingEmbedder::id() const {
    return "hashing-d" + std::to_string(dim_) + "-s" + std::to_string(seed_);
}

std::vector<double> HashingEmbedder::embed_one(const std::string& text) const {
    std::vector<double> v(dim_, 0.0);
    const auto tokens = tokenize(text);

    auto add = [&](std::string_view gram) {
        const std::uint64_t h = fnv1a(gram, seed_);
        const std::size_t bucket = static_cast<std::size_t>(h % dim_);
        const double sign = (h >> 63) ? 1.0 : -1.0;
        v[bucket] += sign;
    };

    for (const auto& token : tokens) {
        add(token);
    }
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        add(tokens[i] + '\x1f' + tokens[i + 1]);
    }

    double norm_sq = 0.0;
    for (double x : v) norm_sq += x * x;
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& x : v) x *= inv;
    }
    return v;
}

std::vector<std::vector<double>> HashingEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        out.push_back(embed_one(text));
    }
    return out;
}

// ---------------------------------------------------------------------------
// RemoteEmbedder
// ---------------------------------------------------------------------------

RemoteEmbedderConfig RemoteEmbedderConfig::from_env(RemoteEmbedderConfig base) {
    if (const char* url = std::getenv("SENSY_EMBED_URL")) {
        base.url = url;
    }
    if (const char* token = std::getenv("SENSY_EMBED_TOKEN")) {
        base.auth_token = token;
    }
    return base;
}

namespace {

// Splits "http://host:port/path" into origin and path.
std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

} // namespace

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {
    if (config_.url.empty()) {
        throw ConfigError("remote embedder: endpoint URL not configured "
                          "(set SENSY_EMBED_URL or the config file)");
    }
    if (config_.dimension == 0) {
        throw ConfigError("remote embedder: dimension must be declared");
    }
    if (config_.max_retries < 1) {
        throw ConfigError("remote embedder: max_retries must be >= 1");
    }
}

std::string RemoteEmbedder::id() const {
    return "remote:" + config_.model;
}

std::vector<std::vector<double>> RemoteEmbedder::request_chunk(
    const std::vector<std::string>& texts) {
    const auto [origin, path] = split_url(config_.url);

    json body;
    body["input"] = texts;
    body["model"] = config_.model;
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_retries; ++attempt) {
        httplib::Client client(origin);
        client.set_connection_timeout(config_.timeout);
        client.set_read_timeout(config_.timeout);
        httplib::Headers headers;
        if (!config_.auth_token.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.auth_token);
        }

        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "no response (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }

        json parsed;
        try {
            parsed = json::parse(res->body);
        } catch (const json::parse_error& e) {
            last_error = std::string("bad JSON: ") + e.what();
            continue;
        }
        if (!parsed.contains("data") || !parsed["data"].is_array() ||
            parsed["data"].size() != texts.size()) {
            last_error = "response \"data\" array missing or wrong length";
            continue;
        }

        std::vector<std::vector<double>> vectors;
        vectors.reserve(texts.size());
        for (const auto& item : parsed["data"]) {
            if (!item.contains("embedding") || !item["embedding"].is_array()) {
                throw TransportError("remote embedder: response item lacks \"embedding\"");
            }
            std::vector<double> v = item["embedding"].get<std::vector<double>>();
            if (v.size() != config_.dimension) {
                // Wrong dimension is a configuration fault, not a transient one.
                throw DimensionMismatchError(
                    "remote embedder: got " + std::to_string(v.size()) +
                    " values, declared dimension is " + std::to_string(config_.dimension));
            }
            vectors.push_back(std::move(v));
        }
        return vectors;
    }
    throw TransportError("remote embedder: " + config_.url + " failed after " +
                         std::to_string(config_.max_retries) + " attempts: " + last_error);
}

std::vector<std::vector<double>> RemoteEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out(texts.size());

    std::vector<std::pair<std::size_t, std::size_t>> chunks;
    for (std::size_t begin = 0; begin < texts.size(); begin += config_.batch_size) {
        chunks.emplace_back(begin, std::min(begin + config_.batch_size, texts.size()));
    }

    const std::size_t workers =
        std::max<std::size_t>(1, std::min(config_.max_concurrency, chunks.size()));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::mutex error_mutex;
    std::exception_ptr first_error;

    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t c = next.fetch_add(1);
                if (c >= chunks.size()) return;
                const auto [begin, end] = chunks[c];
                try {
                    std::vector<std::string> slice(texts.begin() + begin, texts.begin() + end);
                    auto vectors = request_chunk(slice);
                    for (std::size_t i = 0; i < vectors.size(); ++i) {
                        out[begin + i] = std::move(vectors[i]);
                    }
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

// ---------------------------------------------------------------------------
// Featurizer
// ---------------------------------------------------------------------------

Featurizer::Featurizer(KeywordIndex index, PosLexicon pos, ValenceLexicon valence,
                       std::shared_ptr<EmbeddingProvider> provider)
    : index_(std::move(index)),
      pos_(std::move(pos)),
      valence_(std::move(valence)),
      provider_(std::move(provider)) {
    if (!provider_) {
        throw ConfigError("featurizer: embedding provider is required");
    }
}

std::vector<double> Featurizer::assemble(const std::string& text,
                                          std::vector<double> embedding) const {
    if (embedding.size() != provider_->dimension()) {
        throw DimensionMismatchError("featurize: embedding length " +
                                     std::to_string(embedding.size()) +
                                     " does not match provider dimension " +
                                     std::to_string(provider_->dimension()));
    }
    const auto tokens = tokenize(text);
    const SyntacticFeatures syn = syntactic_features(tokens, index_, pos_);
    const SentimentScores sent = sentiment_scores(text, valence_);

    std::vector<double> v;
    v.reserve(dimension());
    v.push_back(static_cast<double>(syn.unique_words));
    v.push_back(static_cast<double>(syn.verbs));
    v.push_back(static_cast<double>(syn.adjectives));
    v.push_back(static_cast<double>(syn.nouns));
    v.push_back(static_cast<double>(syn.sensitive_keywords));
    v.push_back(sent.positive);
    v.push_back(sent.negative);
    v.push_back(sent.neutral);
    v.insert(v.end(), embedding.begin(), embedding.end());
    return v;
}

std::vector<double> Featurizer::featurize(const std::string& text) const {
    return assemble(text, provider_->embed(text).values);
}

std::vector<double> Featurizer::featurize(const Prompt& prompt) const {
    return featurize(prompt.text);
}

std::vector<std::vector<double>> Featurizer::featurize_all(const Dataset& ds) const {
    std::vector<std::string> texts;
    texts.reserve(ds.prompts.size());
    for (const Prompt& p : ds.prompts) texts.push_back(p.text);

    auto embeddings = provider_->embed_batch(texts);
    if (embeddings.size() != texts.size()) {
        throw DimensionMismatchError("featurize_all: provider returned " +
                                     std::to_string(embeddings.size()) + " vectors for " +
                                     std::to_string(texts.size()) + " texts");
    }

    std::vector<std::vector<double>> out(texts.size());
    const std::size_t workers = std::max<std::size_t>(
        1, std::min<std::size_t>(std::thread::hardware_concurrency(), texts.size()));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::mutex error_mutex;
    std::exception_ptr first_error;

    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= texts.size()) return;
                try {
                    out[i] = assemble(texts[i], std::move(embeddings[i]));
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

} // namespace sensy
