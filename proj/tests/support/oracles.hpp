#pragma once

// Brute-force metric oracles, independent of the library implementation.
// Everything here favors the most literal formulation over efficiency.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

namespace sensy::test {

struct OracleCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline OracleCounts oracle_counts(const std::vector<int>& y_true,
                                  const std::vector<int>& y_pred) {
    OracleCounts c;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] == 1 && y_pred[i] == 1) ++c.tp;
        if (y_true[i] == 0 && y_pred[i] == 1) ++c.fp;
        if (y_true[i] == 0 && y_pred[i] == 0) ++c.tn;
        if (y_true[i] == 1 && y_pred[i] == 0) ++c.fn;
    }
    return c;
}

inline double oracle_accuracy(const OracleCounts& c) {
    return static_cast<double>(c.tp + c.tn) /
           static_cast<double>(c.tp + c.fp + c.tn + c.fn);
}

// positive_class selects the one-vs-rest view: 1 uses (tp, fp, fn) as-is,
// 0 swaps the roles.
inline double oracle_precision(const OracleCounts& c, int positive_class) {
    const std::size_t tp = positive_class == 1 ? c.tp : c.tn;
    const std::size_t fp = positive_class == 1 ? c.fp : c.fn;
    if (tp + fp == 0) return 0.0;
    return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

inline double oracle_recall(const OracleCounts& c, int positive_class) {
    const std::size_t tp = positive_class == 1 ? c.tp : c.tn;
    const std::size_t fn = positive_class == 1 ? c.fn : c.fp;
    if (tp + fn == 0) return 0.0;
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

inline double oracle_f1(const OracleCounts& c, int positive_class) {
    const double p = oracle_precision(c, positive_class);
    const double r = oracle_recall(c, positive_class);
    if (p + r == 0.0) return 0.0;
    return 2.0 * p * r / (p + r);
}

// Exhaustive pair counting: every (positive, negative) pair contributes 1 if
// the positive scores higher, 0.5 on a tie.
inline double oracle_roc_auc(const std::vector<int>& y_true,
                             const std::vector<double>& scores) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] != 1) continue;
        for (std::size_t j = 0; j < y_true.size(); ++j) {
            if (y_true[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) {
                wins += 1.0;
            } else if (scores[i] == scores[j]) {
                wins += 0.5;
            }
        }
    }
    return wins / static_cast<double>(pairs);
}

// Exhaustive ranked enumeration of average precision: sort descending with
// ties broken by original index, then recount the positives in every prefix.
inline double oracle_pr_auc(const std::vector<int>& y_true,
                            const std::vector<double>& scores) {
    std::vector<std::size_t> order(y_true.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    std::size_t n_pos = 0;
    for (int t : y_true) n_pos += static_cast<std::size_t>(t == 1);

    double ap = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (y_true[order[k]] != 1) continue;
        std::size_t hits_in_prefix = 0;
        for (std::size_t j = 0; j <= k; ++j) {
            hits_in_prefix += static_cast<std::size_t>(y_true[order[j]] == 1);
        }
        const double precision_at_k =
            static_cast<double>(hits_in_prefix) / static_cast<double>(k + 1);
        ap += precision_at_k / static_cast<double>(n_pos);
    }
    return ap;
}

} // namespace sensy::test
