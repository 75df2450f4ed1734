#include "sensy/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "csv.hpp"
#include "sensy/error.hpp"
#include "sensy/random.hpp"
#include "sensy/text.hpp"

namespace sensy {

using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Enum names
// ---------------------------------------------------------------------------

namespace {

struct CategoryName {
    Category value;
    std::string_view name;
};

constexpr CategoryName kCategoryNames[] = {
    {Category::ReligionPhilosophy, "ReligionPhilosophy"},
    {Category::PoliticsSociety, "PoliticsSociety"},
    {Category::RelationshipsSentiments, "RelationshipsSentiments"},
    {Category::HealthMentalWellbeing, "HealthMentalWellbeing"},
    {Category::IdentityDiversity, "IdentityDiversity"},
    {Category::Sexual, "Sexual"},
    {Category::Security, "Security"},
    {Category::Other, "Other"},
};

constexpr std::pair<Source, std::string_view> kSourceNames[] = {
    {Source::synthetic, "synthetic"},
    {Source::arena, "arena"},
    {Source::external, "external"},
};

} // namespace

const std::vector<Category>& named_categories() {
    static const std::vector<Category> named = {
        Category::ReligionPhilosophy,    Category::PoliticsSociety,
        Category::RelationshipsSentiments, Category::HealthMentalWellbeing,
        Category::IdentityDiversity,     Category::Sexual,
        Category::Security,
    };
    return named;
}

std::string_view to_string(Category c) {
    for (const auto& e : kCategoryNames) {
        if (e.value == c) return e.name;
    }
    return "Other";
}

std::string_view to_string(Source s) {
    for (const auto& [value, name] : kSourceNames) {
        if (value == s) return name;
    }
    return "external";
}

std::optional<Category> category_from_string(std::string_view name) {
    for (const auto& e : kCategoryNames) {
        if (e.name == name) return e.value;
    }
    return std::nullopt;
}

std::optional<Source> source_from_string(std::string_view name) {
    for (const auto& [value, source_name] : kSourceNames) {
        if (source_name == name) return value;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

void validate_prompt(const Prompt& p, const std::string& where) {
    if (p.id.empty()) {
        throw ValidationError(where + ": field \"id\": must be non-empty");
    }
    if (trim(p.text).empty()) {
        throw ValidationError(where + ": field \"text\": must be non-empty after trim (id \"" +
                              p.id + "\")");
    }
    const bool is_sensitive = p.label.has_value() && *p.label == Label::sensitive;
    if (!p.categories.empty() && !is_sensitive) {
        throw ValidationError(where +
                              ": field \"categories\": only sensitive prompts may carry "
                              "categories (id \"" +
                              p.id + "\")");
    }
    if (p.categories.count(Category::Other) > 0 && p.categories.size() > 1) {
        throw ValidationError(where + ": field \"categories\": Other must appear alone (id \"" +
                              p.id + "\")");
    }
}

void validate_dataset(const Dataset& ds) {
    std::set<std::string_view> seen;
    for (std::size_t i = 0; i < ds.prompts.size(); ++i) {
        const std::string where = "record " + std::to_string(i);
        validate_prompt(ds.prompts[i], where);
        if (!seen.insert(ds.prompts[i].id).second) {
            throw ValidationError(where + ": duplicate id \"" + ds.prompts[i].id + "\"");
        }
    }
}

// ---------------------------------------------------------------------------
// KeywordIndex
// ---------------------------------------------------------------------------

KeywordIndex KeywordIndex::from_map(std::map<Category, std::set<std::string>> keywords) {
    KeywordIndex index;
    for (const auto& [category, words] : keywords) {
        if (category == Category::Other) {
            throw ValidationError("keyword index: Other carries no keywords");
        }
        for (const std::string& word : words) {
            if (word.empty()) {
                throw ValidationError("keyword index: empty keyword under " +
                                      std::string(to_string(category)));
            }
            for (char ch : word) {
                const auto c = static_cast<unsigned char>(ch);
                if (std::isspace(c) || std::isupper(c)) {
                    throw ValidationError("keyword index: keyword \"" + word + "\" under " +
                                          std::string(to_string(category)) +
                                          " must be lowercase and whitespace-free");
                }
            }
            auto [it, inserted] = index.token_to_category_.emplace(word, category);
            if (!inserted && it->second != category) {
                throw ValidationError("keyword index: keyword \"" + word + "\" shared by " +
                                      std::string(to_string(it->second)) + " and " +
                                      std::string(to_string(category)));
            }
        }
    }
    index.by_category_ = std::move(keywords);
    return index;
}

KeywordIndex KeywordIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("keyword index: cannot open " + path.string());
    }
    ordered_json root;
    try {
        root = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("keyword index: " + path.string() + ": " + e.what());
    }
    if (!root.is_object()) {
        throw ParseError("keyword index: " + path.string() + ": expected a JSON object");
    }
    std::map<Category, std::set<std::string>> keywords;
    for (const auto& [key, value] : root.items()) {
        const auto category = category_from_string(key);
        if (!category) {
            throw ParseError("keyword index: unknown category \"" + key + "\"");
        }
        if (!value.is_array()) {
            throw ParseError("keyword index: category \"" + key + "\": expected an array");
        }
        auto& set = keywords[*category];
        for (const auto& item : value) {
            if (!item.is_string()) {
                throw ParseError("keyword index: category \"" + key +
                                 "\": keywords must be strings");
            }
            set.insert(item.get<std::string>());
        }
    }
    return from_map(std::move(keywords));
}

const std::set<std::string>& KeywordIndex::keywords(Category c) const {
    static const std::set<std::string> empty;
    const auto it = by_category_.find(c);
    return it == by_category_.end() ? empty : it->second;
}

std::optional<Category> KeywordIndex::category_of(std::string_view token) const {
    const auto it = token_to_category_.find(std::string(token));
    if (it == token_to_category_.end()) return std::nullopt;
    return it->second;
}

std::size_t KeywordIndex::total_keywords() const { return token_to_category_.size(); }

// ---------------------------------------------------------------------------
// Categorization
// ---------------------------------------------------------------------------

std::set<Category> keyword_categories(const std::vector<std::string>& tokens,
                                      const KeywordIndex& index) {
    std::set<Category> out;
    for (const std::string& token : tokens) {
        if (const auto category = index.category_of(token)) {
            out.insert(*category);
        }
    }
    if (out.empty()) {
        out.insert(Category::Other);
    }
    return out;
}

std::set<Category> categorize(const Prompt& prompt, const KeywordIndex& index) {
    if (!prompt.label.has_value() || *prompt.label != Label::sensitive) {
        throw ValidationError("categorize: prompt \"" + prompt.id +
                              "\" is not labeled sensitive");
    }
    return keyword_categories(tokenize(prompt.text), index);
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

DatasetStats dataset_stats(const Dataset& ds) {
    DatasetStats stats;
    for (const auto& [source, _] : kSourceNames) {
        stats.per_source[source] = 0;
    }
    for (const auto& e : kCategoryNames) {
        stats.per_category[e.value] = 0;
    }
    stats.total = ds.prompts.size();
    for (const Prompt& p : ds.prompts) {
        if (!p.label.has_value()) {
            ++stats.unlabeled;
        } else if (*p.label == Label::sensitive) {
            ++stats.sensitive;
        } else {
            ++stats.non_sensitive;
        }
        ++stats.per_source[p.source];
        for (Category c : p.categories) {
            ++stats.per_category[c];
        }
    }
    return stats;
}

// ---------------------------------------------------------------------------
// Stratified sampling
// ---------------------------------------------------------------------------

namespace {

// Stratum keys are small integers: label ordinal or category ordinal.
int stratum_key(const Prompt& p, Strata strata, std::size_t position) {
    if (strata == Strata::label) {
        if (!p.label.has_value()) {
            throw ValidationError("stratified_sample: record " + std::to_string(position) +
                                  " (id \"" + p.id + "\") is unlabeled");
        }
        return static_cast<int>(*p.label);
    }
    if (p.categories.empty()) {
        throw ValidationError("stratified_sample: record " + std::to_string(position) +
                              " (id \"" + p.id + "\") has no categories");
    }
    return static_cast<int>(*p.categories.begin());
}

std::string stratum_name(Strata strata, int key) {
    if (strata == Strata::label) {
        return key == 1 ? "sensitive" : "non_sensitive";
    }
    return std::string(to_string(static_cast<Category>(key)));
}

} // namespace

Dataset stratified_sample(const Dataset& ds, std::size_t n, Strata strata,
                          std::uint64_t seed) {
    if (n == 0) {
        throw ValidationError("stratified_sample: n must be positive");
    }
    if (n > ds.prompts.size()) {
        throw ValidationError("stratified_sample: n=" + std::to_string(n) + " exceeds dataset size " +
                              std::to_string(ds.prompts.size()));
    }

    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < ds.prompts.size(); ++i) {
        members[stratum_key(ds.prompts[i], strata, i)].push_back(i);
    }

    std::vector<int> order;
    for (const auto& [key, _] : members) order.push_back(key);

    const std::size_t base = n / order.size();
    const std::size_t remainder = n % order.size();

    // Seeded order decides which strata absorb the remainder.
    Rng remainder_rng = make_rng(derive_seed(seed, 0x5a3));
    seeded_shuffle(order, remainder_rng);
    std::map<int, std::size_t> quota;
    for (std::size_t i = 0; i < order.size(); ++i) {
        quota[order[i]] = base + (i < remainder ? 1 : 0);
    }

    std::string deficient;
    for (const auto& [key, idx] : members) {
        if (idx.size() < quota[key]) {
            if (!deficient.empty()) deficient += ", ";
            deficient += stratum_name(strata, key) + " (has " + std::to_string(idx.size()) +
                         ", needs " + std::to_string(quota[key]) + ")";
        }
    }
    if (!deficient.empty()) {
        throw ValidationError("stratified_sample: deficient strata: " + deficient);
    }

    std::vector<bool> selected(ds.prompts.size(), false);
    for (auto& [key, idx] : members) {
        Rng rng = make_rng(derive_seed(seed, 0x100 + static_cast<std::uint64_t>(key)));
        seeded_shuffle(idx, rng);
        for (std::size_t i = 0; i < quota[key]; ++i) {
            selected[idx[i]] = true;
        }
    }

    Dataset out;
    out.name = ds.name;
    for (std::size_t i = 0; i < ds.prompts.size(); ++i) {
        if (selected[i]) out.prompts.push_back(ds.prompts[i]);
    }
    return out;
}

std::vector<std::vector<std::string>> make_stratified_folds(const Dataset& ds,
                                                            std::size_t k,
                                                            std::uint64_t seed) {
    if (k < 2) {
        throw ValidationError("make_stratified_folds: k must be >= 2");
    }
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < ds.prompts.size(); ++i) {
        const auto& p = ds.prompts[i];
        if (!p.label.has_value()) {
            throw ValidationError("make_stratified_folds: record " + std::to_string(i) +
                                  " (id \"" + p.id + "\") is unlabeled");
        }
        by_class[static_cast<int>(*p.label)].push_back(i);
    }
    for (const auto& [label, idx] : by_class) {
        if (idx.size() < k) {
            throw ValidationError("make_stratified_folds: class " + std::to_string(label) +
                                  " has " + std::to_string(idx.size()) + " members, needs >= " +
                                  std::to_string(k));
        }
    }

    std::vector<std::vector<std::string>> folds(k);
    for (auto& [label, idx] : by_class) {
        Rng rng = make_rng(derive_seed(seed, 0xF01D + static_cast<std::uint64_t>(label)));
        seeded_shuffle(idx, rng);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            folds[i % k].push_back(ds.prompts[idx[i]].id);
        }
    }
    return folds;
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

Dataset parse_dataset_json(const std::string& content, std::string name) {
    ordered_json root;
    try {
        root = ordered_json::parse(content);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("dataset json: ") + e.what());
    }
    if (!root.is_array()) {
        throw ParseError("dataset json: expected a top-level array");
    }

    Dataset ds;
    ds.name = std::move(name);
    ds.prompts.reserve(root.size());
    std::set<std::string> seen;

    for (std::size_t i = 0; i < root.size(); ++i) {
        const std::string where = "record " + std::to_string(i);
        const auto& obj = root[i];
        if (!obj.is_object()) {
            throw ParseError(where + ": expected an object");
        }

        Prompt p;
        if (!obj.contains("id") || !obj["id"].is_string()) {
            throw ParseError(where + ": field \"id\": expected a string");
        }
        p.id = obj["id"].get<std::string>();

        if (!obj.contains("text") || !obj["text"].is_string()) {
            throw ParseError(where + ": field \"text\": expected a string");
        }
        p.text = obj["text"].get<std::string>();

        if (!obj.contains("source") || !obj["source"].is_string()) {
            throw ParseError(where + ": field \"source\": expected a string");
        }
        const auto source = source_from_string(obj["source"].get<std::string>());
        if (!source) {
            throw ParseError(where + ": field \"source\": unknown value \"" +
                             obj["source"].get<std::string>() + "\"");
        }
        p.source = *source;

        if (obj.contains("label") && !obj["label"].is_null()) {
            const auto& label = obj["label"];
            if (!label.is_number_integer()) {
                throw ParseError(where + ": field \"label\": expected 0, 1 or null");
            }
            const int value = label.get<int>();
            if (value != 0 && value != 1) {
                throw ParseError(where + ": field \"label\": expected 0, 1 or null");
            }
            p.label = static_cast<Label>(value);
        }

        if (obj.contains("categories") && !obj["categories"].is_null()) {
            const auto& cats = obj["categories"];
            if (!cats.is_array()) {
                throw ParseError(where + ": field \"categories\": expected an array");
            }
            for (const auto& item : cats) {
                if (!item.is_string()) {
                    throw ParseError(where + ": field \"categories\": names must be strings");
                }
                const auto category = category_from_string(item.get<std::string>());
                if (!category) {
                    throw ParseError(where + ": field \"categories\": unknown category \"" +
                                     item.get<std::string>() + "\"");
                }
                p.categories.insert(*category);
            }
        }

        validate_prompt(p, where);
        if (!seen.insert(p.id).second) {
            throw ValidationError(where + ": duplicate id \"" + p.id + "\"");
        }
        ds.prompts.push_back(std::move(p));
    }
    return ds;
}

std::string dataset_to_json(const Dataset& ds) {
    ordered_json root = ordered_json::array();
    for (const Prompt& p : ds.prompts) {
        ordered_json obj;
        obj["id"] = p.id;
        obj["text"] = p.text;
        obj["source"] = std::string(to_string(p.source));
        if (p.label.has_value()) {
            obj["label"] = static_cast<int>(*p.label);
        } else {
            obj["label"] = nullptr;
        }
        ordered_json cats = ordered_json::array();
        for (Category c : p.categories) {
            cats.push_back(std::string(to_string(c)));
        }
        obj["categories"] = std::move(cats);
        root.push_back(std::move(obj));
    }
    return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// CSV serialization (RFC-4180)
// ---------------------------------------------------------------------------

namespace {

const char* kCsvHeader = "id,text,source,label,categories";

} // namespace

Dataset parse_dataset_csv(const std::string& content, std::string name) {
    const auto rows = csv::parse_records(content);
    if (rows.empty()) {
        throw ParseError("dataset csv: missing header");
    }
    {
        std::string header;
        for (std::size_t i = 0; i < rows[0].size(); ++i) {
            if (i > 0) header += ',';
            header += rows[0][i];
        }
        if (header != kCsvHeader) {
            throw ParseError("dataset csv: header must be \"" + std::string(kCsvHeader) +
                             "\", got \"" + header + "\"");
        }
    }

    Dataset ds;
    ds.name = std::move(name);
    std::set<std::string> seen;

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const std::string where = "record " + std::to_string(r - 1);
        const auto& row = rows[r];
        if (row.size() != 5) {
            throw ParseError(where + ": expected 5 fields, got " + std::to_string(row.size()));
        }

        Prompt p;
        p.id = row[0];
        p.text = row[1];

        const auto source = source_from_string(row[2]);
        if (!source) {
            throw ParseError(where + ": field \"source\": unknown value \"" + row[2] + "\"");
        }
        p.source = *source;

        if (!row[3].empty()) {
            if (row[3] != "0" && row[3] != "1") {
                throw ParseError(where + ": field \"label\": expected 0, 1 or empty");
            }
            p.label = row[3] == "1" ? Label::sensitive : Label::non_sensitive;
        }

        if (!row[4].empty()) {
            std::stringstream ss(row[4]);
            std::string item;
            while (std::getline(ss, item, '|')) {
                const auto category = category_from_string(item);
                if (!category) {
                    throw ParseError(where + ": field \"categories\": unknown category \"" +
                                     item + "\"");
                }
                p.categories.insert(*category);
            }
        }

        validate_prompt(p, where);
        if (!seen.insert(p.id).second) {
            throw ValidationError(where + ": duplicate id \"" + p.id + "\"");
        }
        ds.prompts.push_back(std::move(p));
    }
    return ds;
}

std::string dataset_to_csv(const Dataset& ds) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const Prompt& p : ds.prompts) {
        std::string categories;
        for (Category c : p.categories) {
            if (!categories.empty()) categories += '|';
            categories += std::string(to_string(c));
        }
        out += csv::escape(p.id);
        out += ',';
        out += csv::escape(p.text);
        out += ',';
        out += std::string(to_string(p.source));
        out += ',';
        out += p.label.has_value() ? std::to_string(static_cast<int>(*p.label)) : "";
        out += ',';
        out += csv::escape(categories);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// File IO
// ---------------------------------------------------------------------------

DatasetFormat format_from_path(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? DatasetFormat::csv : DatasetFormat::json;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("dataset: cannot open " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string name = path.stem().string();
    return format == DatasetFormat::json ? parse_dataset_json(buffer.str(), name)
                                         : parse_dataset_csv(buffer.str(), name);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path,
                  DatasetFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ParseError("dataset: cannot write " + path.string());
    }
    out << (format == DatasetFormat::json ? dataset_to_json(ds) : dataset_to_csv(ds));
}

} // namespace sensy
