#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sensy/corpus.hpp"
#include "sensy/features.hpp"
#include "sensy/forest.hpp"

namespace sensy {

// ---------------------------------------------------------------------------
// Confusion matrix and point metrics
// ---------------------------------------------------------------------------

// Class 1 (sensitive) is the positive class.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct Metrics {
    double accuracy = 0.0;
    ClassMetrics class0;
    ClassMetrics class1;
    ClassMetrics macro;     // unweighted mean over the two classes
    double micro_f1 = 0.0;  // pooled counts; equals accuracy for binary single-label
    std::optional<double> roc_auc;       // absent when undefined (single-class data)
    std::optional<double> pr_auc_class1; // average precision for class 1
    std::size_t n_items = 0;
    bool zero_denominator = false; // some precision/recall had an empty denominator
};

// Thresholded metrics from a confusion matrix. Zero-denominator precision or
// recall follows the 0 convention and sets the flag.
Metrics classification_metrics(const ConfusionMatrix& cm);

// Probability that a random positive outranks a random negative; ties count
// one half. Exact pair-counting semantics. Throws when only one class is
// present ("AUC undefined").
double roc_auc(std::span<const int> y_true, std::span<const double> scores);

// Average precision for class 1: descending stable sort (ties by original
// index), AP = sum of precision-at-hit times the recall increment. Throws
// when there are no positives.
double pr_auc(std::span<const int> y_true, std::span<const double> scores);

// Full single-pass evaluation: thresholded metrics plus both AUCs (absent
// when undefined for this data).
Metrics evaluate_scores(std::span<const int> y_true, std::span<const double> scores,
                        double threshold = 0.5);

// ---------------------------------------------------------------------------
// Evaluation configurations
// ---------------------------------------------------------------------------

struct PipelineConfig {
    ForestHyperparams hyperparams;
    double decision_threshold = 0.5;
};

struct EvalReport {
    // Point metrics for a single train/test pass, or per-fold means for CV.
    Metrics metrics;
    // Sample (n-1) standard deviation across folds; present iff folds is.
    std::optional<Metrics> fold_std;
    std::vector<Metrics> folds;
    std::size_t n_items = 0;
    std::vector<std::string> notes;
};

// Stratified k-fold cross-validation of the full pipeline: featurize once,
// then train on k-1 folds and evaluate on the held-out fold. Reports
// per-metric mean and sample standard deviation across folds.
EvalReport cross_validate(const Dataset& ds, const Featurizer& featurizer,
                          const PipelineConfig& pipeline, std::size_t k = 10,
                          std::uint64_t seed = 0);

// Single pass: train on train_ds, evaluate on test_ds.
EvalReport cross_dataset_eval(const Dataset& train_ds, const Dataset& test_ds,
                              const Featurizer& featurizer,
                              const PipelineConfig& pipeline);

// Deterministic renderings. JSON is byte-stable for identical reports.
std::string report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);

} // namespace sensy
