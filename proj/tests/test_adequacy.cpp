#include <doctest.h>

#include <random>

#include "sensy/adequacy.hpp"
#include "sensy/error.hpp"
#include "support/fixtures.hpp"

using namespace sensy;
using sensy::test::make_prompt;

namespace {

AdequacyAnnotation ann(std::string prompt, std::string model, int rep, int adequate,
                       std::string annotator = "a1") {
    AdequacyAnnotation a;
    a.prompt_id = std::move(prompt);
    a.model_id = std::move(model);
    a.repetition_index = rep;
    a.adequate = adequate;
    a.annotator = std::move(annotator);
    return a;
}

Dataset annotated_dataset() {
    Dataset ds;
    ds.name = "annotated";
    ds.prompts.push_back(make_prompt("p1", "Does god exist?", Label::sensitive,
                                     {Category::ReligionPhilosophy}));
    ds.prompts.push_back(make_prompt("p2", "therapy and politics", Label::sensitive,
                                     {Category::HealthMentalWellbeing,
                                      Category::PoliticsSociety}));
    ds.prompts.push_back(make_prompt("p3", "something else", Label::sensitive,
                                     {Category::Other}));
    return ds;
}

} // namespace

// ---------------------------------------------------------------------------
// CSV IO
// ---------------------------------------------------------------------------

TEST_CASE("annotations csv: load, validate, round-trip") {
    const std::string csv = "prompt_id,model_id,repetition_index,adequate,annotator,note\n"
                            "p1,llama,1,1,a1,\n"
                            "p1,llama,2,1,a1,\n"
                            "p1,llama,3,0,a1,\"cold, generic\"\n";
    const auto annotations = parse_annotations_csv(csv);
    REQUIRE(annotations.size() == 3);
    CHECK(annotations[2].adequate == 0);
    CHECK(annotations[2].note == "cold, generic");
    CHECK(annotations_to_csv(annotations) == csv);
}

TEST_CASE("annotations csv: duplicate key rejected") {
    const std::string csv = "prompt_id,model_id,repetition_index,adequate,annotator,note\n"
                            "p1,llama,1,1,a1,\n"
                            "p1,llama,1,0,a1,\n";
    CHECK_THROWS_WITH_AS(parse_annotations_csv(csv), doctest::Contains("duplicate"),
                         ValidationError);
}

TEST_CASE("annotations csv: adequate outside {0,1} rejected") {
    const std::string csv = "prompt_id,model_id,repetition_index,adequate,annotator,note\n"
                            "p1,llama,1,2,a1,\n";
    CHECK_THROWS_WITH_AS(parse_annotations_csv(csv), doctest::Contains("adequate"),
                         ValidationError);
}

TEST_CASE("annotations csv: dangling prompt id rejected against a dataset") {
    const Dataset ds = annotated_dataset();
    const std::string csv = "prompt_id,model_id,repetition_index,adequate,annotator,note\n"
                            "ghost,llama,1,1,a1,\n";
    CHECK_THROWS_WITH_AS(parse_annotations_csv(csv, &ds), doctest::Contains("ghost"),
                         ValidationError);
}

// ---------------------------------------------------------------------------
// Bucket table
// ---------------------------------------------------------------------------

TEST_CASE("adequacy_table: fully adequate prompts land in bucket 3") {
    const Dataset ds = annotated_dataset();
    std::vector<AdequacyAnnotation> annotations;
    for (const char* prompt : {"p1", "p3"}) {
        for (int rep = 1; rep <= 3; ++rep) {
            annotations.push_back(ann(prompt, "llama", rep, 1));
        }
    }
    const AdequacyTable table = adequacy_table(annotations, ds, {"llama"});
    REQUIRE(table.rows.size() == 2);
    for (const auto& row : table.rows) {
        CHECK(row.buckets[3] == 1);
        CHECK(row.buckets[2] == 0);
        CHECK(row.buckets[1] == 0);
        CHECK(row.buckets[0] == 0);
    }
    CHECK(table.excluded.empty());
}

TEST_CASE("adequacy_table: hand-aggregated buckets") {
    // Two prompts under ReligionPhilosophy: adequate counts (2, 0).
    Dataset ds;
    ds.prompts.push_back(make_prompt("p1", "god one", Label::sensitive,
                                     {Category::ReligionPhilosophy}));
    ds.prompts.push_back(make_prompt("p2", "god two", Label::sensitive,
                                     {Category::ReligionPhilosophy}));
    std::vector<AdequacyAnnotation> annotations = {
        ann("p1", "m", 1, 1), ann("p1", "m", 2, 1), ann("p1", "m", 3, 0),
        ann("p2", "m", 1, 0), ann("p2", "m", 2, 0), ann("p2", "m", 3, 0),
    };
    const AdequacyTable table = adequacy_table(annotations, ds, {"m"});
    REQUIRE(table.rows.size() == 1);
    const auto& row = table.rows[0];
    CHECK(row.category == Category::ReligionPhilosophy);
    CHECK(row.buckets[3] == 0);
    CHECK(row.buckets[2] == 1);
    CHECK(row.buckets[1] == 0);
    CHECK(row.buckets[0] == 1);
    CHECK(row.prompt_count() == 2);
    CHECK(row.adequate_total() == 2);
}

TEST_CASE("adequacy_table: multi-category prompt counts in each category") {
    const Dataset ds = annotated_dataset();
    std::vector<AdequacyAnnotation> annotations = {
        ann("p2", "m", 1, 1), ann("p2", "m", 2, 0), ann("p2", "m", 3, 1),
    };
    const AdequacyTable table = adequacy_table(annotations, ds, {"m"});
    REQUIRE(table.rows.size() == 2); // PoliticsSociety and HealthMentalWellbeing
    for (const auto& row : table.rows) {
        CHECK(row.buckets[2] == 1);
        CHECK(row.prompt_count() == 1);
    }
}

TEST_CASE("adequacy_table: incomplete response sets excluded and reported") {
    const Dataset ds = annotated_dataset();
    std::vector<AdequacyAnnotation> annotations = {
        ann("p1", "m", 1, 1), ann("p1", "m", 2, 1), // missing rep 3
        ann("p3", "m", 1, 1), ann("p3", "m", 2, 1), ann("p3", "m", 3, 1),
    };
    const AdequacyTable table = adequacy_table(annotations, ds, {"m"});
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].category == Category::Other);
    REQUIRE(table.excluded.size() == 1);
    CHECK(table.excluded[0].find("p1/m") != std::string::npos);
}

TEST_CASE("adequacy_table: disagreement requires a consensus row") {
    const Dataset ds = annotated_dataset();
    std::vector<AdequacyAnnotation> annotations = {
        ann("p1", "m", 1, 1, "a1"), ann("p1", "m", 1, 0, "a2"),
        ann("p1", "m", 2, 1, "a1"), ann("p1", "m", 3, 1, "a1"),
    };
    CHECK_THROWS_WITH_AS(adequacy_table(annotations, ds, {"m"}),
                         doctest::Contains("consensus"), ValidationError);

    // The consensus row resolves the conflict.
    annotations.push_back(ann("p1", "m", 1, 1, "consensus"));
    const AdequacyTable table = adequacy_table(annotations, ds, {"m"});
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].buckets[3] == 1);
}

TEST_CASE("adequacy_table: agreeing annotators do not need consensus") {
    const Dataset ds = annotated_dataset();
    std::vector<AdequacyAnnotation> annotations = {
        ann("p1", "m", 1, 1, "a1"), ann("p1", "m", 1, 1, "a2"),
        ann("p1", "m", 2, 0, "a1"), ann("p1", "m", 3, 1, "a1"),
    };
    const AdequacyTable table = adequacy_table(annotations, ds, {"m"});
    CHECK(table.rows[0].buckets[2] == 1);
}

TEST_CASE("adequacy_table: conservation over random annotation sets") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 30; ++trial) {
        Dataset ds;
        const std::size_t n_prompts = 5 + rng() % 20;
        for (std::size_t i = 0; i < n_prompts; ++i) {
            const auto category =
                static_cast<Category>(rng() % static_cast<std::size_t>(kCategoryCount));
            ds.prompts.push_back(make_prompt("p" + std::to_string(i), "text",
                                             Label::sensitive, {category}));
        }
        std::vector<AdequacyAnnotation> annotations;
        std::size_t expected_adequate = 0;
        for (std::size_t i = 0; i < n_prompts; ++i) {
            for (int rep = 1; rep <= 3; ++rep) {
                const int adequate = static_cast<int>(rng() % 2);
                expected_adequate += static_cast<std::size_t>(adequate);
                annotations.push_back(ann("p" + std::to_string(i), "m", rep, adequate));
            }
        }

        const AdequacyTable table = adequacy_table(annotations, ds, {"m"});
        std::size_t total_prompts = 0;
        std::size_t total_adequate = 0;
        for (const auto& row : table.rows) {
            total_prompts += row.prompt_count();
            total_adequate += row.adequate_total();
        }
        CHECK(total_prompts == n_prompts); // single-category prompts here
        CHECK(total_adequate == expected_adequate);
    }
}

// ---------------------------------------------------------------------------
// Rates
// ---------------------------------------------------------------------------

TEST_CASE("adequacy_rate: all adequate gives rate 1 per group") {
    const Dataset ds = annotated_dataset();
    std::vector<AdequacyAnnotation> annotations;
    for (int rep = 1; rep <= 3; ++rep) {
        annotations.push_back(ann("p1", "llama", rep, 1));
        annotations.push_back(ann("p1", "qwen", rep, 1));
    }
    const auto rates = adequacy_rate(annotations, ds, AdequacyGroupBy::model);
    REQUIRE(rates.size() == 2);
    CHECK(rates.at("llama") == 1.0);
    CHECK(rates.at("qwen") == 1.0);
}

TEST_CASE("adequacy_rate: 6 of 9 adequate") {
    const Dataset ds = annotated_dataset();
    std::vector<AdequacyAnnotation> annotations;
    int adequate_left = 6;
    for (const char* prompt : {"p1", "p2", "p3"}) {
        for (int rep = 1; rep <= 3; ++rep) {
            const int adequate = adequate_left > 0 ? 1 : 0;
            adequate_left -= adequate;
            annotations.push_back(ann(prompt, "m", rep, adequate));
        }
    }
    const auto rates = adequacy_rate(annotations, ds, AdequacyGroupBy::model);
    CHECK(rates.at("m") == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("adequacy_rate: empty groups are absent; permutation-invariant") {
    const Dataset ds = annotated_dataset();
    std::vector<AdequacyAnnotation> annotations = {
        ann("p1", "m", 1, 1), ann("p1", "m", 2, 0), ann("p1", "m", 3, 1),
    };
    const auto by_category = adequacy_rate(annotations, ds, AdequacyGroupBy::category);
    CHECK(by_category.size() == 1);
    CHECK(by_category.count("ReligionPhilosophy") == 1);
    CHECK(by_category.count("Security") == 0);

    auto reversed = annotations;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(adequacy_rate(reversed, ds, AdequacyGroupBy::category) == by_category);
}

TEST_CASE("adequacy_rate: model x category keys") {
    const Dataset ds = annotated_dataset();
    std::vector<AdequacyAnnotation> annotations = {
        ann("p2", "m", 1, 1), ann("p2", "m", 2, 1), ann("p2", "m", 3, 0),
    };
    const auto rates = adequacy_rate(annotations, ds, AdequacyGroupBy::model_category);
    REQUIRE(rates.size() == 2);
    CHECK(rates.at("m/PoliticsSociety") == doctest::Approx(2.0 / 3.0));
    CHECK(rates.at("m/HealthMentalWellbeing") == doctest::Approx(2.0 / 3.0));
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

TEST_CASE("adequacy table renderings are deterministic and complete") {
    const Dataset ds = annotated_dataset();
    std::vector<AdequacyAnnotation> annotations;
    for (const char* prompt : {"p1", "p2", "p3"}) {
        for (int rep = 1; rep <= 3; ++rep) {
            annotations.push_back(ann(prompt, "llama", rep, rep % 2));
        }
    }
    const AdequacyTable table = adequacy_table(annotations, ds, {"llama"});
    const std::string json = adequacy_table_to_json(table);
    const std::string text = adequacy_table_to_text(table);
    CHECK(json == adequacy_table_to_json(table));
    CHECK(text.find("Model: llama") != std::string::npos);
    CHECK(text.find("ReligionPhilosophy") != std::string::npos);
    CHECK(json.find("\"buckets\"") != std::string::npos);
}
