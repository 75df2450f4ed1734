#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sensy/corpus.hpp"

namespace sensy {

// ---------------------------------------------------------------------------
// Annotations
// ---------------------------------------------------------------------------

// One human judgment of one generated response.
struct AdequacyAnnotation {
    std::string prompt_id;
    std::string model_id;
    int repetition_index = 1; // 1-based
    int adequate = 0;         // 0 or 1
    std::string annotator;
    std::string note;
};

// CSV: header prompt_id,model_id,repetition_index,adequate,annotator,note.
// Rejects duplicate (prompt, model, repetition, annotator) keys and values
// outside {0, 1}. When a dataset is supplied, annotations referencing unknown
// prompt ids are rejected too.
std::vector<AdequacyAnnotation> load_annotations(const std::filesystem::path& path,
                                                 const Dataset* dataset = nullptr);
void save_annotations(const std::vector<AdequacyAnnotation>& annotations,
                      const std::filesystem::path& path);

std::vector<AdequacyAnnotation> parse_annotations_csv(const std::string& content,
                                                      const Dataset* dataset = nullptr);
std::string annotations_to_csv(const std::vector<AdequacyAnnotation>& annotations);

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

// Bucket counts for one (category, model) cell: buckets[a] = number of
// prompts with exactly `a` adequate responses, a in 0..repetitions.
struct AdequacyBucketRow {
    Category category = Category::Other;
    std::string model_id;
    std::vector<std::size_t> buckets;

    std::size_t prompt_count() const;
    std::size_t adequate_total() const; // sum of a * buckets[a]
};

struct AdequacyTable {
    int repetitions = 3;
    std::vector<AdequacyBucketRow> rows;
    // Prompts excluded because their response set is incomplete or their
    // annotators disagree without a consensus row; "prompt_id/model_id: why".
    std::vector<std::string> excluded;
};

// Buckets each fully-annotated prompt by its adequate-response count, per
// (category, model). Multi-category prompts count in each of their
// categories. Annotator disagreement on one response without an
// annotator="consensus" row is an error.
AdequacyTable adequacy_table(const std::vector<AdequacyAnnotation>& annotations,
                             const Dataset& dataset,
                             const std::vector<std::string>& models,
                             int repetitions = 3);

enum class AdequacyGroupBy { model, category, model_category };

// Adequate responses / total responses per group; empty groups are absent.
// Category groupings need the dataset to resolve prompt categories.
std::map<std::string, double> adequacy_rate(
    const std::vector<AdequacyAnnotation>& annotations, const Dataset& dataset,
    AdequacyGroupBy group_by);

// Deterministic renderings of the bucket table.
std::string adequacy_table_to_json(const AdequacyTable& table);
std::string adequacy_table_to_text(const AdequacyTable& table);

} // namespace sensy
