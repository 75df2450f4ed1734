#include "sensy/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "sensy/error.hpp"
#include "sensy/random.hpp"

namespace sensy {

using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Point metrics
// ---------------------------------------------------------------------------

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size()) {
        throw ValidationError("confusion_matrix: " + std::to_string(y_true.size()) +
                              " truths vs " + std::to_string(y_pred.size()) + " predictions");
    }
    if (y_true.empty()) {
        throw ValidationError("confusion_matrix: empty input");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
            throw ValidationError("confusion_matrix: labels must be 0 or 1 (item " +
                                  std::to_string(i) + ")");
        }
        if (t == 1) {
            ++(p == 1 ? cm.tp : cm.fn);
        } else {
            ++(p == 1 ? cm.fp : cm.tn);
        }
    }
    return cm;
}

namespace {

double safe_ratio(std::size_t num, std::size_t den, bool& zero_denominator) {
    if (den == 0) {
        zero_denominator = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double precision, double recall) {
    const double sum = precision + recall;
    if (sum == 0.0) return 0.0;
    return 2.0 * precision * recall / sum;
}

} // namespace

Metrics classification_metrics(const ConfusionMatrix& cm) {
    const std::size_t total = cm.total();
    if (total == 0) {
        throw ValidationError("classification_metrics: empty confusion matrix");
    }

    Metrics m;
    m.n_items = total;
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(total);

    // One-vs-rest views: for class 0 the roles of tp/tn and fp/fn swap.
    m.class1.precision = safe_ratio(cm.tp, cm.tp + cm.fp, m.zero_denominator);
    m.class1.recall = safe_ratio(cm.tp, cm.tp + cm.fn, m.zero_denominator);
    m.class1.f1 = f1_of(m.class1.precision, m.class1.recall);

    m.class0.precision = safe_ratio(cm.tn, cm.tn + cm.fn, m.zero_denominator);
    m.class0.recall = safe_ratio(cm.tn, cm.tn + cm.fp, m.zero_denominator);
    m.class0.f1 = f1_of(m.class0.precision, m.class0.recall);

    m.macro.precision = (m.class0.precision + m.class1.precision) / 2.0;
    m.macro.recall = (m.class0.recall + m.class1.recall) / 2.0;
    m.macro.f1 = (m.class0.f1 + m.class1.f1) / 2.0;

    // Micro scores pool the per-class counts. Pooled precision and recall are
    // always equal here, and the harmonic mean of equal values is the value.
    const std::size_t pooled_tp = cm.tp + cm.tn;
    const std::size_t pooled_fp = cm.fp + cm.fn;
    const std::size_t pooled_fn = cm.fn + cm.fp;
    const double micro_p = safe_ratio(pooled_tp, pooled_tp + pooled_fp, m.zero_denominator);
    const double micro_r = safe_ratio(pooled_tp, pooled_tp + pooled_fn, m.zero_denominator);
    m.micro_f1 = micro_p == micro_r ? micro_p : f1_of(micro_p, micro_r);

    return m;
}

double roc_auc(std::span<const int> y_true, std::span<const double> scores) {
    if (y_true.size() != scores.size()) {
        throw ValidationError("roc_auc: length mismatch");
    }
    std::size_t n_pos = 0;
    for (int t : y_true) n_pos += static_cast<std::size_t>(t == 1);
    const std::size_t n_neg = y_true.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw ValidationError("roc_auc: AUC undefined for single-class input");
    }

    // Midrank formulation: equivalent to exact pair counting with ties at 0.5.
    std::vector<std::size_t> order(y_true.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (y_true[order[k]] == 1) pos_rank_sum += midrank;
        }
        i = j + 1;
    }

    const double n_pos_d = static_cast<double>(n_pos);
    return (pos_rank_sum - n_pos_d * (n_pos_d + 1.0) / 2.0) /
           (n_pos_d * static_cast<double>(n_neg));
}

double pr_auc(std::span<const int> y_true, std::span<const double> scores) {
    if (y_true.size() != scores.size()) {
        throw ValidationError("pr_auc: length mismatch");
    }
    std::size_t n_pos = 0;
    for (int t : y_true) n_pos += static_cast<std::size_t>(t == 1);
    if (n_pos == 0) {
        throw ValidationError("pr_auc: no positive items");
    }

    std::vector<std::size_t> order(y_true.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Descending by score; stable, so score ties keep original index order.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (y_true[order[k]] != 1) continue;
        ++hits;
        const double precision_at_k =
            static_cast<double>(hits) / static_cast<double>(k + 1);
        ap += precision_at_k / static_cast<double>(n_pos);
    }
    return ap;
}

Metrics evaluate_scores(std::span<const int> y_true, std::span<const double> scores,
                        double threshold) {
    if (y_true.size() != scores.size()) {
        throw ValidationError("evaluate_scores: length mismatch");
    }
    std::vector<int> predictions(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        predictions[i] = scores[i] >= threshold ? 1 : 0;
    }
    Metrics m = classification_metrics(confusion_matrix(y_true, predictions));
    try {
        m.roc_auc = roc_auc(y_true, scores);
    } catch (const ValidationError&) {
        m.roc_auc = std::nullopt;
    }
    try {
        m.pr_auc_class1 = pr_auc(y_true, scores);
    } catch (const ValidationError&) {
        m.pr_auc_class1 = std::nullopt;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Fold aggregation
// ---------------------------------------------------------------------------

namespace {

struct FieldRef {
    const char* name;
    std::optional<double> (*get)(const Metrics&);
    void (*set)(Metrics&, std::optional<double>);
};

// Every numeric field of Metrics, used for mean/std aggregation.
constexpr FieldRef kFields[] = {
    {"accuracy", [](const Metrics& m) -> std::optional<double> { return m.accuracy; },
     [](Metrics& m, std::optional<double> v) { m.accuracy = v.value_or(0.0); }},
    {"precision_macro", [](const Metrics& m) -> std::optional<double> { return m.macro.precision; },
     [](Metrics& m, std::optional<double> v) { m.macro.precision = v.value_or(0.0); }},
    {"recall_macro", [](const Metrics& m) -> std::optional<double> { return m.macro.recall; },
     [](Metrics& m, std::optional<double> v) { m.macro.recall = v.value_or(0.0); }},
    {"f1_macro", [](const Metrics& m) -> std::optional<double> { return m.macro.f1; },
     [](Metrics& m, std::optional<double> v) { m.macro.f1 = v.value_or(0.0); }},
    {"micro_f1", [](const Metrics& m) -> std::optional<double> { return m.micro_f1; },
     [](Metrics& m, std::optional<double> v) { m.micro_f1 = v.value_or(0.0); }},
    {"roc_auc", [](const Metrics& m) -> std::optional<double> { return m.roc_auc; },
     [](Metrics& m, std::optional<double> v) { m.roc_auc = v; }},
    {"pr_auc_class1", [](const Metrics& m) -> std::optional<double> { return m.pr_auc_class1; },
     [](Metrics& m, std::optional<double> v) { m.pr_auc_class1 = v; }},
    {"precision_class0", [](const Metrics& m) -> std::optional<double> { return m.class0.precision; },
     [](Metrics& m, std::optional<double> v) { m.class0.precision = v.value_or(0.0); }},
    {"recall_class0", [](const Metrics& m) -> std::optional<double> { return m.class0.recall; },
     [](Metrics& m, std::optional<double> v) { m.class0.recall = v.value_or(0.0); }},
    {"f1_class0", [](const Metrics& m) -> std::optional<double> { return m.class0.f1; },
     [](Metrics& m, std::optional<double> v) { m.class0.f1 = v.value_or(0.0); }},
    {"precision_class1", [](const Metrics& m) -> std::optional<double> { return m.class1.precision; },
     [](Metrics& m, std::optional<double> v) { m.class1.precision = v.value_or(0.0); }},
    {"recall_class1", [](const Metrics& m) -> std::optional<double> { return m.class1.recall; },
     [](Metrics& m, std::optional<double> v) { m.class1.recall = v.value_or(0.0); }},
    {"f1_class1", [](const Metrics& m) -> std::optional<double> { return m.class1.f1; },
     [](Metrics& m, std::optional<double> v) { m.class1.f1 = v.value_or(0.0); }},
};

// Field-wise mean and sample (n-1) standard deviation across folds. Optional
// metrics aggregate over the folds where they are defined.
void aggregate_folds(const std::vector<Metrics>& folds, Metrics& mean_out, Metrics& std_out) {
    for (const FieldRef& field : kFields) {
        std::vector<double> values;
        values.reserve(folds.size());
        for (const Metrics& fold : folds) {
            if (const auto v = field.get(fold)) values.push_back(*v);
        }
        if (values.empty()) {
            field.set(mean_out, std::nullopt);
            field.set(std_out, std::nullopt);
            continue;
        }
        const double mean =
            std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
        double variance = 0.0;
        if (values.size() > 1) {
            for (double v : values) variance += (v - mean) * (v - mean);
            variance /= static_cast<double>(values.size() - 1);
        }
        field.set(mean_out, mean);
        field.set(std_out, std::sqrt(variance));
    }
}

std::vector<int> dataset_labels(const Dataset& ds, const char* caller) {
    std::vector<int> y;
    y.reserve(ds.prompts.size());
    for (std::size_t i = 0; i < ds.prompts.size(); ++i) {
        const auto& label = ds.prompts[i].label;
        if (!label.has_value()) {
            throw ValidationError(std::string(caller) + ": record " + std::to_string(i) +
                                  " (id \"" + ds.prompts[i].id + "\") is unlabeled");
        }
        y.push_back(static_cast<int>(*label));
    }
    return y;
}

} // namespace

// ---------------------------------------------------------------------------
// Cross-validation and cross-dataset evaluation
// ---------------------------------------------------------------------------

EvalReport cross_validate(const Dataset& ds, const Featurizer& featurizer,
                          const PipelineConfig& pipeline, std::size_t k,
                          std::uint64_t seed) {
    const auto folds = make_stratified_folds(ds, k, seed);
    const auto X = featurizer.featurize_all(ds);
    const auto y = dataset_labels(ds, "cross_validate");

    std::unordered_map<std::string_view, std::size_t> index_of;
    index_of.reserve(ds.prompts.size());
    for (std::size_t i = 0; i < ds.prompts.size(); ++i) {
        index_of.emplace(ds.prompts[i].id, i);
    }

    EvalReport report;
    report.n_items = ds.prompts.size();

    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<bool> in_test(ds.prompts.size(), false);
        for (const std::string& id : folds[f]) {
            in_test[index_of.at(id)] = true;
        }

        std::vector<std::vector<double>> X_train;
        std::vector<int> y_train;
        std::vector<std::size_t> test_rows;
        for (std::size_t i = 0; i < ds.prompts.size(); ++i) {
            if (in_test[i]) {
                test_rows.push_back(i);
            } else {
                X_train.push_back(X[i]);
                y_train.push_back(y[i]);
            }
        }

        const ForestModel model = train_forest(X_train, y_train, pipeline.hyperparams);

        std::vector<int> y_test;
        std::vector<double> scores;
        y_test.reserve(test_rows.size());
        scores.reserve(test_rows.size());
        for (std::size_t i : test_rows) {
            y_test.push_back(y[i]);
            scores.push_back(predict_proba(model, X[i]));
        }

        Metrics fold_metrics = evaluate_scores(y_test, scores, pipeline.decision_threshold);
        if (!fold_metrics.roc_auc.has_value()) {
            report.notes.push_back("fold " + std::to_string(f) +
                                   ": ROC-AUC undefined (single-class test fold)");
        }
        if (!fold_metrics.pr_auc_class1.has_value()) {
            report.notes.push_back("fold " + std::to_string(f) +
                                   ": PR-AUC undefined (no positives in test fold)");
        }
        report.folds.push_back(std::move(fold_metrics));
    }

    Metrics mean;
    Metrics stddev;
    aggregate_folds(report.folds, mean, stddev);
    mean.n_items = ds.prompts.size();
    bool any_zero_den = false;
    for (const Metrics& fold : report.folds) any_zero_den |= fold.zero_denominator;
    mean.zero_denominator = any_zero_den;
    report.metrics = mean;
    report.fold_std = stddev;
    return report;
}

EvalReport cross_dataset_eval(const Dataset& train_ds, const Dataset& test_ds,
                              const Featurizer& featurizer,
                              const PipelineConfig& pipeline) {
    const auto X_train = featurizer.featurize_all(train_ds);
    const auto y_train = dataset_labels(train_ds, "cross_dataset_eval (train)");
    const auto X_test = featurizer.featurize_all(test_ds);
    const auto y_test = dataset_labels(test_ds, "cross_dataset_eval (test)");

    const ForestModel model = train_forest(X_train, y_train, pipeline.hyperparams);

    std::vector<double> scores;
    scores.reserve(X_test.size());
    for (const auto& row : X_test) {
        scores.push_back(predict_proba(model, row));
    }

    EvalReport report;
    report.n_items = test_ds.prompts.size();
    report.metrics = evaluate_scores(y_test, scores, pipeline.decision_threshold);
    if (!report.metrics.roc_auc.has_value()) {
        report.notes.push_back("ROC-AUC undefined (single-class test set)");
    }
    if (!report.metrics.pr_auc_class1.has_value()) {
        report.notes.push_back("PR-AUC undefined (no positives in test set)");
    }
    return report;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

ordered_json metrics_to_json(const Metrics& m) {
    ordered_json out;
    out["accuracy"] = m.accuracy;
    out["precision_macro"] = m.macro.precision;
    out["recall_macro"] = m.macro.recall;
    out["f1_macro"] = m.macro.f1;
    out["micro_f1"] = m.micro_f1;
    if (m.roc_auc.has_value()) {
        out["roc_auc"] = *m.roc_auc;
    } else {
        out["roc_auc"] = nullptr;
    }
    if (m.pr_auc_class1.has_value()) {
        out["pr_auc_class1"] = *m.pr_auc_class1;
    } else {
        out["pr_auc_class1"] = nullptr;
    }
    out["class0"] = {{"precision", m.class0.precision},
                     {"recall", m.class0.recall},
                     {"f1", m.class0.f1}};
    out["class1"] = {{"precision", m.class1.precision},
                     {"recall", m.class1.recall},
                     {"f1", m.class1.f1}};
    out["zero_denominator"] = m.zero_denominator;
    return out;
}

std::string format_value(std::optional<double> v) {
    if (!v.has_value()) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *v);
    return buf;
}

void append_row(std::string& out, const std::string& label, std::optional<double> a,
                std::optional<double> b, bool with_std) {
    char buf[96];
    if (with_std) {
        std::snprintf(buf, sizeof(buf), "%-22s %-10s %-10s\n", label.c_str(),
                      format_value(a).c_str(), format_value(b).c_str());
    } else {
        std::snprintf(buf, sizeof(buf), "%-22s %-10s\n", label.c_str(),
                      format_value(a).c_str());
    }
    out += buf;
}

} // namespace

std::string report_to_json(const EvalReport& report) {
    ordered_json out;
    out["n_items"] = report.n_items;
    out["metrics"] = metrics_to_json(report.metrics);
    if (report.fold_std.has_value()) {
        out["std"] = metrics_to_json(*report.fold_std);
        ordered_json folds = ordered_json::array();
        for (const Metrics& fold : report.folds) {
            folds.push_back(metrics_to_json(fold));
        }
        out["folds"] = std::move(folds);
    }
    out["notes"] = report.notes;
    out["metadata"] = {{"aggregate_rows", "macro"},
                       {"pr_auc", "average precision, class 1"},
                       {"std", "sample (n-1) over folds"}};
    return out.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& report) {
    const bool cv = report.fold_std.has_value();
    const Metrics& m = report.metrics;
    std::string out;

    char header[96];
    if (cv) {
        std::snprintf(header, sizeof(header), "%-22s %-10s %-10s\n", "Metric", "Mean", "Std.");
    } else {
        std::snprintf(header, sizeof(header), "%-22s %-10s\n", "Metric", "Value");
    }
    out += header;
    out += std::string(cv ? 44 : 33, '-') + "\n";

    if (cv) {
        // Cross-validation layout: the six aggregate rows with mean and std.
        const Metrics& s = *report.fold_std;
        append_row(out, "Accuracy", m.accuracy, s.accuracy, true);
        append_row(out, "Precision (macro)", m.macro.precision, s.macro.precision, true);
        append_row(out, "Recall (macro)", m.macro.recall, s.macro.recall, true);
        append_row(out, "F1-score (macro)", m.macro.f1, s.macro.f1, true);
        append_row(out, "ROC-AUC", m.roc_auc, s.roc_auc, true);
        append_row(out, "PR-AUC (class 1)", m.pr_auc_class1, s.pr_auc_class1, true);
    } else {
        // Single-pass layout: aggregates plus per-class blocks.
        append_row(out, "Accuracy", m.accuracy, std::nullopt, false);
        append_row(out, "Macro F1", m.macro.f1, std::nullopt, false);
        append_row(out, "Micro F1", m.micro_f1, std::nullopt, false);
        append_row(out, "ROC-AUC", m.roc_auc, std::nullopt, false);
        append_row(out, "PR-AUC (class 1)", m.pr_auc_class1, std::nullopt, false);
        out += "Class 0 (Non-sensitive)\n";
        append_row(out, "  Precision", m.class0.precision, std::nullopt, false);
        append_row(out, "  Recall", m.class0.recall, std::nullopt, false);
        append_row(out, "  F1-score", m.class0.f1, std::nullopt, false);
        out += "Class 1 (Sensitive)\n";
        append_row(out, "  Precision", m.class1.precision, std::nullopt, false);
        append_row(out, "  Recall", m.class1.recall, std::nullopt, false);
        append_row(out, "  F1-score", m.class1.f1, std::nullopt, false);
    }

    for (const std::string& note : report.notes) {
        out += "note: " + note + "\n";
    }
    return out;
}

} // namespace sensy
