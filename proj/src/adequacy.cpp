#include "sensy/adequacy.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

#include "csv.hpp"
#include "sensy/error.hpp"

namespace sensy {

using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// CSV IO
// ---------------------------------------------------------------------------

namespace {

const char* kAnnotationHeader = "prompt_id,model_id,repetition_index,adequate,annotator,note";

} // namespace

std::vector<AdequacyAnnotation> parse_annotations_csv(const std::string& content,
                                                      const Dataset* dataset) {
    const auto rows = csv::parse_records(content);
    if (rows.empty()) {
        throw ParseError("annotations csv: missing header");
    }
    {
        std::string header;
        for (std::size_t i = 0; i < rows[0].size(); ++i) {
            if (i > 0) header += ',';
            header += rows[0][i];
        }
        if (header != kAnnotationHeader) {
            throw ParseError("annotations csv: header must be \"" +
                             std::string(kAnnotationHeader) + "\"");
        }
    }

    std::set<std::string> known_ids;
    if (dataset != nullptr) {
        for (const Prompt& p : dataset->prompts) known_ids.insert(p.id);
    }

    std::vector<AdequacyAnnotation> annotations;
    std::set<std::tuple<std::string, std::string, int, std::string>> seen;

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const std::string where = "record " + std::to_string(r - 1);
        const auto& row = rows[r];
        if (row.size() != 6) {
            throw ParseError(where + ": expected 6 fields, got " + std::to_string(row.size()));
        }

        AdequacyAnnotation a;
        a.prompt_id = row[0];
        a.model_id = row[1];
        if (a.prompt_id.empty() || a.model_id.empty()) {
            throw ValidationError(where + ": prompt_id and model_id must be non-empty");
        }

        try {
            std::size_t used = 0;
            a.repetition_index = std::stoi(row[2], &used);
            if (used != row[2].size()) throw std::invalid_argument(row[2]);
        } catch (const std::exception&) {
            throw ParseError(where + ": field \"repetition_index\": not an integer");
        }
        if (a.repetition_index < 1) {
            throw ValidationError(where + ": field \"repetition_index\": must be >= 1");
        }

        if (row[3] != "0" && row[3] != "1") {
            throw ValidationError(where + ": field \"adequate\": must be 0 or 1");
        }
        a.adequate = row[3] == "1" ? 1 : 0;

        a.annotator = row[4];
        if (a.annotator.empty()) {
            throw ValidationError(where + ": field \"annotator\": must be non-empty");
        }
        a.note = row[5];

        if (!seen.insert({a.prompt_id, a.model_id, a.repetition_index, a.annotator}).second) {
            throw ValidationError(where + ": duplicate annotation key (" + a.prompt_id + ", " +
                                  a.model_id + ", " + std::to_string(a.repetition_index) +
                                  ", " + a.annotator + ")");
        }
        if (dataset != nullptr && known_ids.count(a.prompt_id) == 0) {
            throw ValidationError(where + ": prompt_id \"" + a.prompt_id +
                                  "\" not present in dataset \"" + dataset->name + "\"");
        }
        annotations.push_back(std::move(a));
    }
    return annotations;
}

std::string annotations_to_csv(const std::vector<AdequacyAnnotation>& annotations) {
    std::string out = std::string(kAnnotationHeader) + "\n";
    for (const AdequacyAnnotation& a : annotations) {
        out += csv::escape(a.prompt_id);
        out += ',';
        out += csv::escape(a.model_id);
        out += ',';
        out += std::to_string(a.repetition_index);
        out += ',';
        out += std::to_string(a.adequate);
        out += ',';
        out += csv::escape(a.annotator);
        out += ',';
        out += csv::escape(a.note);
        out += '\n';
    }
    return out;
}

std::vector<AdequacyAnnotation> load_annotations(const std::filesystem::path& path,
                                                 const Dataset* dataset) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("annotations: cannot open " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_annotations_csv(buffer.str(), dataset);
}

void save_annotations(const std::vector<AdequacyAnnotation>& annotations,
                      const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ParseError("annotations: cannot write " + path.string());
    }
    out << annotations_to_csv(annotations);
}

// ---------------------------------------------------------------------------
// Consensus resolution
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kConsensusAnnotator = "consensus";

struct SlotKey {
    std::string prompt_id;
    std::string model_id;
    int repetition_index;

    bool operator<(const SlotKey& o) const {
        return std::tie(prompt_id, model_id, repetition_index) <
               std::tie(o.prompt_id, o.model_id, o.repetition_index);
    }
};

// Collapses per-annotator judgments into one value per response slot.
// Disagreement without an annotator="consensus" row refuses to aggregate.
std::map<SlotKey, int> resolve_judgments(const std::vector<AdequacyAnnotation>& annotations) {
    struct SlotState {
        std::optional<int> consensus;
        std::optional<int> agreed;
        bool conflict = false;
    };
    std::map<SlotKey, SlotState> slots;
    for (const AdequacyAnnotation& a : annotations) {
        SlotState& state = slots[{a.prompt_id, a.model_id, a.repetition_index}];
        if (a.annotator == kConsensusAnnotator) {
            state.consensus = a.adequate;
        } else if (!state.agreed.has_value()) {
            state.agreed = a.adequate;
        } else if (*state.agreed != a.adequate) {
            state.conflict = true;
        }
    }

    std::map<SlotKey, int> resolved;
    for (const auto& [key, state] : slots) {
        if (state.consensus.has_value()) {
            resolved[key] = *state.consensus;
        } else if (state.conflict) {
            throw ValidationError("adequacy: annotators disagree on (" + key.prompt_id + ", " +
                                  key.model_id + ", rep " +
                                  std::to_string(key.repetition_index) +
                                  ") and no consensus row exists");
        } else {
            resolved[key] = *state.agreed;
        }
    }
    return resolved;
}

std::set<Category> categories_or_other(const Prompt& p) {
    if (p.categories.empty()) return {Category::Other};
    return p.categories;
}

} // namespace

// ---------------------------------------------------------------------------
// Bucket table
// ---------------------------------------------------------------------------

std::size_t AdequacyBucketRow::prompt_count() const {
    std::size_t n = 0;
    for (std::size_t b : buckets) n += b;
    return n;
}

std::size_t AdequacyBucketRow::adequate_total() const {
    std::size_t n = 0;
    for (std::size_t a = 0; a < buckets.size(); ++a) n += a * buckets[a];
    return n;
}

AdequacyTable adequacy_table(const std::vector<AdequacyAnnotation>& annotations,
                             const Dataset& dataset,
                             const std::vector<std::string>& models,
                             int repetitions) {
    if (repetitions < 1) {
        throw ConfigError("adequacy_table: repetitions must be >= 1");
    }
    const auto resolved = resolve_judgments(annotations);

    std::unordered_map<std::string_view, const Prompt*> prompt_of;
    for (const Prompt& p : dataset.prompts) prompt_of.emplace(p.id, &p);
    for (const auto& [key, _] : resolved) {
        if (prompt_of.count(key.prompt_id) == 0) {
            throw ValidationError("adequacy_table: prompt_id \"" + key.prompt_id +
                                  "\" not present in dataset \"" + dataset.name + "\"");
        }
    }

    AdequacyTable table;
    table.repetitions = repetitions;

    // Group the resolved judgments by (prompt, model): rep -> value.
    std::map<std::pair<std::string, std::string>, std::map<int, int>> grouped;
    for (const auto& [key, value] : resolved) {
        grouped[{key.prompt_id, key.model_id}][key.repetition_index] = value;
    }

    // cell key: (model position, category ordinal) -> bucket counts; rows come
    // out grouped by model, categories in canonical order.
    std::map<std::pair<std::size_t, int>, std::vector<std::size_t>> cells;

    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        const std::string& model = models[mi];
        for (const Prompt& p : dataset.prompts) {
            const auto it = grouped.find({p.id, model});
            if (it == grouped.end()) continue; // not annotated for this model
            const std::map<int, int>& reps = it->second;

            bool complete = static_cast<int>(reps.size()) == repetitions;
            for (int rep = 1; complete && rep <= repetitions; ++rep) {
                complete = reps.count(rep) > 0;
            }
            if (!complete) {
                table.excluded.push_back(p.id + "/" + model + ": has " +
                                         std::to_string(reps.size()) +
                                         " annotated repetitions, expected " +
                                         std::to_string(repetitions));
                continue;
            }

            int adequate_count = 0;
            for (const auto& [_, value] : reps) adequate_count += value;

            for (Category c : categories_or_other(p)) {
                auto& buckets = cells[{mi, static_cast<int>(c)}];
                if (buckets.empty()) buckets.assign(static_cast<std::size_t>(repetitions) + 1, 0);
                ++buckets[static_cast<std::size_t>(adequate_count)];
            }
        }
    }

    for (const auto& [key, buckets] : cells) {
        AdequacyBucketRow row;
        row.category = static_cast<Category>(key.second);
        row.model_id = models[key.first];
        row.buckets = buckets;
        table.rows.push_back(std::move(row));
    }
    return table;
}

// ---------------------------------------------------------------------------
// Rates
// ---------------------------------------------------------------------------

std::map<std::string, double> adequacy_rate(
    const std::vector<AdequacyAnnotation>& annotations, const Dataset& dataset,
    AdequacyGroupBy group_by) {
    const auto resolved = resolve_judgments(annotations);

    std::unordered_map<std::string_view, const Prompt*> prompt_of;
    for (const Prompt& p : dataset.prompts) prompt_of.emplace(p.id, &p);

    std::map<std::string, std::pair<std::size_t, std::size_t>> tallies; // adequate, total
    for (const auto& [key, value] : resolved) {
        std::vector<std::string> groups;
        if (group_by == AdequacyGroupBy::model) {
            groups.push_back(key.model_id);
        } else {
            const auto it = prompt_of.find(key.prompt_id);
            if (it == prompt_of.end()) {
                throw ValidationError("adequacy_rate: prompt_id \"" + key.prompt_id +
                                      "\" not present in dataset \"" + dataset.name + "\"");
            }
            for (Category c : categories_or_other(*it->second)) {
                if (group_by == AdequacyGroupBy::category) {
                    groups.push_back(std::string(to_string(c)));
                } else {
                    groups.push_back(key.model_id + "/" + std::string(to_string(c)));
                }
            }
        }
        for (const std::string& group : groups) {
            auto& [adequate, total] = tallies[group];
            adequate += static_cast<std::size_t>(value);
            ++total;
        }
    }

    std::map<std::string, double> rates;
    for (const auto& [group, tally] : tallies) {
        rates[group] = static_cast<double>(tally.first) / static_cast<double>(tally.second);
    }
    return rates;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

std::string adequacy_table_to_json(const AdequacyTable& table) {
    ordered_json root;
    root["repetitions"] = table.repetitions;
    ordered_json rows = ordered_json::array();
    for (const AdequacyBucketRow& row : table.rows) {
        ordered_json obj;
        obj["category"] = std::string(to_string(row.category));
        obj["model_id"] = row.model_id;
        ordered_json buckets;
        for (int a = table.repetitions; a >= 0; --a) {
            buckets[std::to_string(a)] = row.buckets[static_cast<std::size_t>(a)];
        }
        obj["buckets"] = std::move(buckets);
        obj["prompts"] = row.prompt_count();
        obj["adequate_responses"] = row.adequate_total();
        rows.push_back(std::move(obj));
    }
    root["rows"] = std::move(rows);
    root["excluded"] = table.excluded;
    return root.dump(2) + "\n";
}

std::string adequacy_table_to_text(const AdequacyTable& table) {
    std::string out;
    char buf[160];

    std::string current_model;
    for (const AdequacyBucketRow& row : table.rows) {
        if (row.model_id != current_model) {
            current_model = row.model_id;
            out += "Model: " + current_model + "\n";
            std::string header;
            std::snprintf(buf, sizeof(buf), "%-28s", "Category");
            header += buf;
            for (int a = table.repetitions; a >= 0; --a) {
                std::snprintf(buf, sizeof(buf), " %5d", a);
                header += buf;
            }
            out += header + "\n";
        }
        std::snprintf(buf, sizeof(buf), "%-28s", std::string(to_string(row.category)).c_str());
        out += buf;
        for (int a = table.repetitions; a >= 0; --a) {
            std::snprintf(buf, sizeof(buf), " %5zu", row.buckets[static_cast<std::size_t>(a)]);
            out += buf;
        }
        out += "\n";
    }
    if (!table.excluded.empty()) {
        out += "Excluded (incomplete response sets):\n";
        for (const std::string& e : table.excluded) {
            out += "  " + e + "\n";
        }
    }
    return out;
}

} // namespace sensy
