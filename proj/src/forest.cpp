#include "sensy/forest.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "sensy/error.hpp"
#include "sensy/random.hpp"

namespace sensy {

// ---------------------------------------------------------------------------
// Hyperparameters
// ---------------------------------------------------------------------------

std::size_t FeaturesPerSplit::resolve(std::size_t feature_dim) const {
    switch (kind) {
    case Kind::all:
        return feature_dim;
    case Kind::fixed:
        if (count < 1 || count > feature_dim) {
            throw ConfigError("features_per_split: fixed(" + std::to_string(count) +
                              ") out of range for dimension " + std::to_string(feature_dim));
        }
        return count;
    case Kind::sqrt_dim:
    default: {
        const auto m = static_cast<std::size_t>(std::sqrt(static_cast<double>(feature_dim)));
        return std::clamp<std::size_t>(m, 1, feature_dim);
    }
    }
}

// ---------------------------------------------------------------------------
// Tree building
// ---------------------------------------------------------------------------

namespace {

constexpr double kMinImpurityDecrease = 1e-12;

double gini(std::size_t c0, std::size_t c1) {
    const double n = static_cast<double>(c0 + c1);
    if (n == 0.0) return 0.0;
    const double p0 = static_cast<double>(c0) / n;
    const double p1 = static_cast<double>(c1) / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

struct BestSplit {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double weighted_gini = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                std::size_t feature_dim, const ForestHyperparams& hp, std::uint64_t seed)
        : X_(X), y_(y), dim_(feature_dim), hp_(hp),
          mtry_(hp.features_per_split.resolve(feature_dim)), rng_(make_rng(seed)) {}

    DecisionTree build() {
        std::vector<std::size_t> rows;
        const std::size_t n = y_.size();
        rows.reserve(n);
        if (hp_.bootstrap) {
            for (std::size_t i = 0; i < n; ++i) {
                rows.push_back(static_cast<std::size_t>(bounded(rng_, n)));
            }
        } else {
            rows.resize(n);
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        DecisionTree tree;
        grow(tree, rows, 0);
        return tree;
    }

private:
    std::int32_t grow(DecisionTree& tree, std::vector<std::size_t>& rows, std::size_t depth) {
        const std::size_t n = rows.size();
        std::size_t c1 = 0;
        for (std::size_t r : rows) c1 += static_cast<std::size_t>(y_[r]);
        const std::size_t c0 = n - c1;
        const double leaf_probability = static_cast<double>(c1) / static_cast<double>(n);

        const bool depth_limited = hp_.max_depth.has_value() && depth >= *hp_.max_depth;
        if (c0 == 0 || c1 == 0 || depth_limited || n < 2 * hp_.min_samples_leaf) {
            return add_leaf(tree, leaf_probability);
        }

        const BestSplit best = find_best_split(rows, c0, c1);
        if (!best.found || best.weighted_gini >= gini(c0, c1) - kMinImpurityDecrease) {
            return add_leaf(tree, leaf_probability);
        }

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        for (std::size_t r : rows) {
            (X_[r][best.feature] <= best.threshold ? left_rows : right_rows).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        const auto index = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{static_cast<std::uint32_t>(best.feature),
                                      best.threshold, leaf_probability, -1, -1});
        const std::int32_t left = grow(tree, left_rows, depth + 1);
        const std::int32_t right = grow(tree, right_rows, depth + 1);
        tree.nodes[static_cast<std::size_t>(index)].left = left;
        tree.nodes[static_cast<std::size_t>(index)].right = right;
        return index;
    }

    static std::int32_t add_leaf(DecisionTree& tree, double probability) {
        const auto index = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{0, 0.0, probability, -1, -1});
        return index;
    }

    // Candidate features for this node, ascending so that equal-Gini ties
    // resolve to the lowest feature index.
    std::vector<std::size_t> sample_features() {
        std::vector<std::size_t> all(dim_);
        std::iota(all.begin(), all.end(), std::size_t{0});
        for (std::size_t i = 0; i < mtry_; ++i) {
            const std::size_t j =
                i + static_cast<std::size_t>(bounded(rng_, dim_ - i));
            std::swap(all[i], all[j]);
        }
        all.resize(mtry_);
        std::sort(all.begin(), all.end());
        return all;
    }

    BestSplit find_best_split(const std::vector<std::size_t>& rows, std::size_t c0,
                              std::size_t c1) {
        const std::size_t n = rows.size();
        BestSplit best;

        std::vector<std::pair<double, int>> values;
        values.reserve(n);

        for (std::size_t f : sample_features()) {
            values.clear();
            for (std::size_t r : rows) {
                values.emplace_back(X_[r][f], y_[r]);
            }
            std::sort(values.begin(), values.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            std::size_t left1 = 0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left1 += static_cast<std::size_t>(values[i].second);
                const double a = values[i].first;
                const double b = values[i + 1].first;
                if (!(a < b)) continue;

                const std::size_t left_n = i + 1;
                const std::size_t right_n = n - left_n;
                if (left_n < hp_.min_samples_leaf || right_n < hp_.min_samples_leaf) {
                    continue;
                }

                const std::size_t left0 = left_n - left1;
                const std::size_t right1 = c1 - left1;
                const std::size_t right0 = c0 - left0;
                const double weighted =
                    (static_cast<double>(left_n) * gini(left0, left1) +
                     static_cast<double>(right_n) * gini(right0, right1)) /
                    static_cast<double>(n);

                // Strict < keeps the first (lowest feature, lowest threshold)
                // among exact ties.
                if (!best.found || weighted < best.weighted_gini) {
                    double threshold = a + (b - a) / 2.0;
                    if (threshold >= b) threshold = a; // adjacent doubles
                    best = BestSplit{true, f, threshold, weighted};
                }
            }
        }
        return best;
    }

    const std::vector<std::vector<double>>& X_;
    const std::vector<int>& y_;
    std::size_t dim_;
    const ForestHyperparams& hp_;
    std::size_t mtry_;
    Rng rng_;
};

} // namespace

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

ForestModel train_forest(const std::vector<std::vector<double>>& X,
                         const std::vector<int>& y, const ForestHyperparams& hp) {
    if (X.empty()) {
        throw ValidationError("train_forest: empty training set");
    }
    if (X.size() != y.size()) {
        throw ValidationError("train_forest: " + std::to_string(X.size()) + " rows vs " +
                              std::to_string(y.size()) + " labels");
    }
    if (X.size() < 2) {
        throw ValidationError("train_forest: need at least 2 rows");
    }
    const std::size_t dim = X[0].size();
    if (dim == 0) {
        throw ValidationError("train_forest: zero-dimensional features");
    }
    for (std::size_t i = 0; i < X.size(); ++i) {
        if (X[i].size() != dim) {
            throw DimensionMismatchError("train_forest: row " + std::to_string(i) + " has " +
                                         std::to_string(X[i].size()) + " features, expected " +
                                         std::to_string(dim));
        }
    }
    ClassCounts counts;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 0) {
            ++counts.class0;
        } else if (y[i] == 1) {
            ++counts.class1;
        } else {
            throw ValidationError("train_forest: label at row " + std::to_string(i) +
                                  " must be 0 or 1");
        }
    }
    if (hp.n_trees == 0) {
        throw ConfigError("train_forest: n_trees must be positive");
    }
    if (hp.min_samples_leaf == 0) {
        throw ConfigError("train_forest: min_samples_leaf must be positive");
    }
    hp.features_per_split.resolve(dim); // validates fixed(k) range up front

    ForestModel model;
    model.hyperparams = hp;
    model.feature_dim = dim;
    model.training_counts = counts;
    model.trees.resize(hp.n_trees);

    // Each tree draws from its own derived seed, so results do not depend on
    // scheduling.
    const std::size_t workers = std::max<std::size_t>(
        1, std::min<std::size_t>(std::thread::hardware_concurrency(), hp.n_trees));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::mutex error_mutex;
    std::exception_ptr first_error;

    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t t = next.fetch_add(1);
                if (t >= hp.n_trees) return;
                try {
                    TreeBuilder builder(X, y, dim, hp, derive_seed(hp.seed, t));
                    model.trees[t] = builder.build();
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return model;
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

double DecisionTree::predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const TreeNode& node = nodes[i];
        i = static_cast<std::size_t>(x[node.feature] <= node.threshold ? node.left
                                                                       : node.right);
    }
    return nodes[i].probability;
}

double predict_proba(const ForestModel& model, std::span<const double> x) {
    if (x.size() != model.feature_dim) {
        throw DimensionMismatchError("predict_proba: input has " + std::to_string(x.size()) +
                                     " features, model expects " +
                                     std::to_string(model.feature_dim));
    }
    double sum = 0.0;
    for (const DecisionTree& tree : model.trees) {
        sum += tree.predict(x);
    }
    return sum / static_cast<double>(model.trees.size());
}

int predict_label(const ForestModel& model, std::span<const double> x, double threshold) {
    return predict_proba(model, x) >= threshold ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'N', 'S', 'Y', 'R', 'F', '0', '1'};
constexpr std::uint16_t kFormatVersion = 1;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
    }
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
    const auto bits = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
    }
}

class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, std::size_t end) : bytes_(bytes), end_(end) {}

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }

    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_]) |
                          static_cast<std::uint16_t>(bytes_[pos_ + 1]) << 8;
        pos_ += 2;
        return v;
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        }
        pos_ += 8;
        return std::bit_cast<double>(v);
    }

    std::size_t position() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > end_) {
            throw ModelTruncatedError("model file: truncated at byte " + std::to_string(pos_));
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t end_;
    std::size_t pos_ = 0;
};

constexpr std::uint8_t kNodeSplit = 0x00;
constexpr std::uint8_t kNodeLeaf = 0x01;

void write_node(std::vector<std::uint8_t>& out, const DecisionTree& tree, std::size_t i) {
    const TreeNode& node = tree.nodes[i];
    if (node.is_leaf()) {
        out.push_back(kNodeLeaf);
        put_f64(out, node.probability);
        return;
    }
    out.push_back(kNodeSplit);
    put_u32(out, node.feature);
    put_f64(out, node.threshold);
    write_node(out, tree, static_cast<std::size_t>(node.left));
    write_node(out, tree, static_cast<std::size_t>(node.right));
}

std::int32_t read_node(Reader& reader, DecisionTree& tree, std::uint32_t feature_dim) {
    const std::uint8_t kind = reader.u8();
    if (kind == kNodeLeaf) {
        const double probability = reader.f64();
        if (!(probability >= 0.0 && probability <= 1.0)) {
            throw ModelFormatError("model file: leaf probability out of [0, 1]");
        }
        const auto index = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{0, 0.0, probability, -1, -1});
        return index;
    }
    if (kind != kNodeSplit) {
        throw ModelFormatError("model file: unknown node kind " + std::to_string(kind));
    }
    const std::uint32_t feature = reader.u32();
    if (feature >= feature_dim) {
        throw ModelFormatError("model file: split feature " + std::to_string(feature) +
                               " exceeds dimension " + std::to_string(feature_dim));
    }
    const double threshold = reader.f64();
    const auto index = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{feature, threshold, 0.0, -1, -1});
    const std::int32_t left = read_node(reader, tree, feature_dim);
    const std::int32_t right = read_node(reader, tree, feature_dim);
    tree.nodes[static_cast<std::size_t>(index)].left = left;
    tree.nodes[static_cast<std::size_t>(index)].right = right;
    return index;
}

} // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) {
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            }
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::uint8_t b : bytes) {
        crc = table[(crc ^ b) & 0xFFu] ^ (crc >> 8);
    }
    return crc ^ 0xFFFFFFFFu;
}

std::vector<std::uint8_t> serialize_model(const ForestModel& model) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_u16(out, kFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(model.feature_dim));
    put_u32(out, static_cast<std::uint32_t>(model.trees.size()));
    for (const DecisionTree& tree : model.trees) {
        if (tree.nodes.empty()) {
            throw ValidationError("serialize_model: tree without nodes");
        }
        write_node(out, tree, 0);
    }
    put_u32(out, crc32(out));
    return out;
}

ForestModel deserialize_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < sizeof(kMagic)) {
        throw ModelTruncatedError("model file: shorter than the magic header");
    }
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw ModelFormatError("model file: bad magic bytes");
    }
    if (bytes.size() < sizeof(kMagic) + 2 + 4 + 4 + 4) {
        throw ModelTruncatedError("model file: header truncated");
    }

    // Everything before the trailing CRC is covered by it.
    Reader reader(bytes, bytes.size() - 4);
    for (std::size_t i = 0; i < sizeof(kMagic); ++i) reader.u8();

    const std::uint16_t version = reader.u16();
    if (version != kFormatVersion) {
        throw ModelVersionError("model file: version " + std::to_string(version) +
                                " not supported (expected " +
                                std::to_string(kFormatVersion) + ")");
    }

    const std::uint32_t feature_dim = reader.u32();
    const std::uint32_t n_trees = reader.u32();
    if (feature_dim == 0 || n_trees == 0) {
        throw ModelFormatError("model file: zero feature_dim or n_trees");
    }

    ForestModel model;
    model.feature_dim = feature_dim;
    model.trees.reserve(n_trees);
    for (std::uint32_t t = 0; t < n_trees; ++t) {
        DecisionTree tree;
        read_node(reader, tree, feature_dim);
        model.trees.push_back(std::move(tree));
    }
    if (reader.position() != bytes.size() - 4) {
        throw ModelFormatError("model file: trailing bytes after tree data");
    }

    Reader crc_reader(bytes, bytes.size());
    for (std::size_t i = 0; i < bytes.size() - 4; ++i) crc_reader.u8();
    const std::uint32_t stored = crc_reader.u32();
    const std::uint32_t actual = crc32(bytes.subspan(0, bytes.size() - 4));
    if (stored != actual) {
        throw ModelChecksumError("model file: CRC mismatch");
    }

    model.hyperparams.n_trees = n_trees;
    model.hyperparams.bootstrap = true;
    return model;
}

void save_model(const ForestModel& model, const std::filesystem::path& path) {
    const auto bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ParseError("model file: cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

ForestModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("model file: cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

std::string model_fingerprint(const ForestModel& model) {
    // Hash the payload only: a CRC over data that already carries its own
    // trailing CRC collapses to the fixed residue for every model.
    const auto bytes = serialize_model(model);
    const std::uint32_t crc =
        crc32(std::span(bytes).subspan(0, bytes.size() - 4));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "rf-%08x", crc);
    return std::string(buf) + "-d" + std::to_string(model.feature_dim) + "-t" +
           std::to_string(model.trees.size());
}

} // namespace sensy
