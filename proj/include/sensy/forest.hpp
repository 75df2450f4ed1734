#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sensy {

// ---------------------------------------------------------------------------
// Hyperparameters
// ---------------------------------------------------------------------------

struct FeaturesPerSplit {
    enum class Kind { sqrt_dim, all, fixed };

    Kind kind = Kind::sqrt_dim;
    std::size_t count = 0; // used by Kind::fixed

    static FeaturesPerSplit sqrt_dim() { return {Kind::sqrt_dim, 0}; }
    static FeaturesPerSplit all() { return {Kind::all, 0}; }
    static FeaturesPerSplit fixed(std::size_t k) { return {Kind::fixed, k}; }

    std::size_t resolve(std::size_t feature_dim) const;
};

struct ForestHyperparams {
    std::size_t n_trees = 200;
    std::optional<std::size_t> max_depth;  // nullopt = unlimited
    std::size_t min_samples_leaf = 1;
    FeaturesPerSplit features_per_split{};
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Trees and forest
// ---------------------------------------------------------------------------

// Nodes live in a flat array; child indices of -1 mark a leaf.
struct TreeNode {
    std::uint32_t feature = 0;
    double threshold = 0.0;
    double probability = 0.0; // class-1 fraction at the leaf
    std::int32_t left = -1;
    std::int32_t right = -1;

    bool is_leaf() const { return left < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    // Routing rule: left iff x[feature] <= threshold.
    double predict(std::span<const double> x) const;
};

struct ClassCounts {
    std::size_t class0 = 0;
    std::size_t class1 = 0;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    ForestHyperparams hyperparams;
    std::size_t feature_dim = 0;
    ClassCounts training_counts; // fingerprint of the training distribution
};

// ---------------------------------------------------------------------------
// Training and prediction
// ---------------------------------------------------------------------------

// Grows n_trees CART trees on seeded bootstrap resamples, splitting on the
// (feature, threshold) pair with minimal weighted Gini impurity; thresholds
// are midpoints of consecutive distinct sorted values. Ties break toward the
// lowest feature index, then the lowest threshold. Deterministic for a fixed
// (row order, labels, hyperparameters).
ForestModel train_forest(const std::vector<std::vector<double>>& X,
                         const std::vector<int>& y,
                         const ForestHyperparams& hp);

// Mean of the trees' leaf class-1 probabilities.
double predict_proba(const ForestModel& model, std::span<const double> x);

// 1 iff predict_proba >= threshold.
int predict_label(const ForestModel& model, std::span<const double> x,
                  double threshold = 0.5);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------
// Layout: magic "SNSYRF01", version u16, feature_dim u32, n_trees u32,
// per-tree node stream in pre-order (kind byte; split: feature u32 +
// threshold f64; leaf: probability f64), trailing CRC32 of everything before
// it. All integers little-endian.

std::vector<std::uint8_t> serialize_model(const ForestModel& model);
ForestModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const ForestModel& model, const std::filesystem::path& path);
ForestModel load_model(const std::filesystem::path& path);

// Short hex fingerprint of the serialized model, used by the gateway.
std::string model_fingerprint(const ForestModel& model);

// CRC32 (IEEE) used by the model file format; exposed for tests.
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

} // namespace sensy
