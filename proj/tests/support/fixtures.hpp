#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "sensy/corpus.hpp"
#include "sensy/features.hpp"

namespace sensy::test {

inline std::filesystem::path data_dir() { return std::filesystem::path(SENSY_DATA_DIR); }

inline KeywordIndex shipped_keywords() {
    static const KeywordIndex index = KeywordIndex::load(data_dir() / "keywords.json");
    return index;
}

inline PosLexicon shipped_pos_lexicon() {
    static const PosLexicon lex = PosLexicon::load(data_dir() / "pos_lexicon.tsv");
    return lex;
}

inline ValenceLexicon shipped_valence_lexicon() {
    static const ValenceLexicon lex = ValenceLexicon::load(data_dir() / "valence_lexicon.tsv");
    return lex;
}

inline Prompt make_prompt(std::string id, std::string text,
                          std::optional<Label> label = std::nullopt,
                          std::set<Category> categories = {},
                          Source source = Source::external) {
    Prompt p;
    p.id = std::move(id);
    p.text = std::move(text);
    p.source = source;
    p.label = label;
    p.categories = std::move(categories);
    return p;
}

// Featurizer over the shipped lexicons and the offline hashing embedder.
inline Featurizer make_featurizer(std::size_t dim = 256, std::uint64_t seed = 0) {
    return Featurizer(shipped_keywords(), shipped_pos_lexicon(), shipped_valence_lexicon(),
                      std::make_shared<HashingEmbedder>(dim, seed));
}

// Unique temp file path for round-trip tests.
inline std::filesystem::path temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "sensy-tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace sensy::test
