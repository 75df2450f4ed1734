#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sensy {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class Source { synthetic, arena, external };

enum class Label : int { non_sensitive = 0, sensitive = 1 };

// Seven thematic categories plus the fallback. Other is assigned only when no
// named category applies, and never together with another category.
enum class Category {
    ReligionPhilosophy,
    PoliticsSociety,
    RelationshipsSentiments,
    HealthMentalWellbeing,
    IdentityDiversity,
    Sexual,
    Security,
    Other,
};

inline constexpr int kCategoryCount = 8;

// The seven keyword-backed categories, in canonical order.
const std::vector<Category>& named_categories();

std::string_view to_string(Category c);
std::string_view to_string(Source s);
std::optional<Category> category_from_string(std::string_view name);
std::optional<Source> source_from_string(std::string_view name);

struct Prompt {
    std::string id;
    std::string text;
    Source source = Source::external;
    std::optional<Label> label;
    std::set<Category> categories;
};

struct Dataset {
    std::string name;
    std::vector<Prompt> prompts;
};

// Validates a single prompt's invariants; throws ValidationError.
// `where` is prepended to error messages (e.g. "record 3").
void validate_prompt(const Prompt& p, const std::string& where);

// Per-prompt invariants plus id uniqueness.
void validate_dataset(const Dataset& ds);

// ---------------------------------------------------------------------------
// Keyword index
// ---------------------------------------------------------------------------

// Per-category lists of lowercase keywords used for lexical categorization.
// Categories may not share keywords; Other carries no keywords.
class KeywordIndex {
public:
    KeywordIndex() = default;

    // File format: JSON object mapping category name -> array of strings.
    static KeywordIndex load(const std::filesystem::path& path);
    static KeywordIndex from_map(std::map<Category, std::set<std::string>> keywords);

    const std::set<std::string>& keywords(Category c) const;

    // Category owning this token, if any (tokens are unique across categories).
    std::optional<Category> category_of(std::string_view token) const;

    bool contains(std::string_view token) const { return category_of(token).has_value(); }

    std::size_t total_keywords() const;

private:
    std::map<Category, std::set<std::string>> by_category_;
    std::unordered_map<std::string, Category> token_to_category_;
};

// Union of categories whose keyword sets intersect the token list;
// {Other} when nothing matches.
std::set<Category> keyword_categories(const std::vector<std::string>& tokens,
                                      const KeywordIndex& index);

// Keyword-based categorization. Only prompts labeled sensitive may be
// categorized; anything else throws ValidationError.
std::set<Category> categorize(const Prompt& prompt, const KeywordIndex& index);

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

struct DatasetStats {
    std::size_t total = 0;
    std::size_t sensitive = 0;
    std::size_t non_sensitive = 0;
    std::size_t unlabeled = 0;
    std::map<Source, std::size_t> per_source;
    // A multi-category prompt increments each of its categories.
    std::map<Category, std::size_t> per_category;
};

DatasetStats dataset_stats(const Dataset& ds);

// ---------------------------------------------------------------------------
// Sampling and folds
// ---------------------------------------------------------------------------

enum class Strata { category, label };

// Returns n prompts with per-stratum counts equal within +-1; the remainder
// goes to strata picked by a seeded shuffle. Deterministic for fixed inputs.
// For Strata::category a multi-category prompt belongs to its lowest-ordinal
// category. Throws ValidationError when a stratum cannot fill its quota.
Dataset stratified_sample(const Dataset& ds, std::size_t n, Strata strata,
                          std::uint64_t seed);

// Partitions the dataset into k folds of prompt ids, preserving the class
// ratio within each fold (per-class deviation from the proportional ideal is
// strictly below one item). Requires every prompt labeled and every class to
// have at least k members.
std::vector<std::vector<std::string>> make_stratified_folds(const Dataset& ds,
                                                            std::size_t k,
                                                            std::uint64_t seed);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

enum class DatasetFormat { json, csv };

// Guesses the format from the file extension; defaults to json.
DatasetFormat format_from_path(const std::filesystem::path& path);

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
void save_dataset(const Dataset& ds, const std::filesystem::path& path,
                  DatasetFormat format);

// String-level variants used by the file functions and the tests.
Dataset parse_dataset_json(const std::string& content, std::string name);
Dataset parse_dataset_csv(const std::string& content, std::string name);
std::string dataset_to_json(const Dataset& ds);
std::string dataset_to_csv(const Dataset& ds);

} // namespace sensy
