#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "sensy/corpus.hpp"
#include "sensy/features.hpp"
#include "sensy/forest.hpp"

namespace httplib {
class Server;
}

namespace sensy {

// ---------------------------------------------------------------------------
// Verdicts and policy
// ---------------------------------------------------------------------------

struct GateVerdict {
    bool sensitive = false;
    double probability = 0.0;
    std::set<Category> categories; // keyword-based, advisory
    std::string model_fingerprint;
    std::chrono::microseconds elapsed{0};
};

enum class GateMode { annotate, block, allow };

std::string_view to_string(GateMode m);
std::optional<GateMode> gate_mode_from_string(std::string_view name);

struct GatePolicy {
    GateMode mode = GateMode::annotate;
    double threshold = 0.5;
};

// Model plus cached fingerprint, shared immutably across requests.
struct GateEngine {
    ForestModel model;
    std::string fingerprint;

    explicit GateEngine(ForestModel m)
        : model(std::move(m)), fingerprint(model_fingerprint(model)) {}
};

// Classifies one text: probability from the forest, sensitive per threshold,
// keyword categories computed regardless of the verdict.
GateVerdict classify_text(const std::string& text, const GateEngine& engine,
                          const Featurizer& featurizer, double threshold = 0.5);
GateVerdict classify_text(const std::string& text, const ForestModel& model,
                          const Featurizer& featurizer, double threshold = 0.5);

// ---------------------------------------------------------------------------
// HTTP service
// ---------------------------------------------------------------------------

struct GateServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8787;                  // 0 picks a free port
    std::filesystem::path model_path; // optional when a model is injected
    GatePolicy default_policy{};
    std::size_t max_body_bytes = 32 * 1024;
    bool watch_model = true;          // hot-reload on file change
    std::chrono::milliseconds watch_interval{500};
};

// POST /v1/classify {"text"} -> verdict; POST /v1/gate {"text","policy"} ->
// verdict plus action in {forwarded-annotation, blocked, allowed};
// GET /healthz -> model fingerprint. Malformed JSON yields 400 with field
// diagnostics, oversized bodies 413. The model swaps atomically on reload;
// in-flight requests finish on the engine they started with.
class GateService {
public:
    GateService(GateServiceConfig cfg, Featurizer featurizer);
    GateService(GateServiceConfig cfg, Featurizer featurizer, ForestModel model);
    ~GateService();

    GateService(const GateService&) = delete;
    GateService& operator=(const GateService&) = delete;

    // Binds and serves on a background thread; returns the bound port.
    int start();
    void stop();

    // Serves on the calling thread until stop() (CLI entry point).
    void run();

    std::string fingerprint() const;
    void reload_now(); // explicit reload from model_path

    // Texts forwarded downstream (annotate/allow); blocked requests never
    // appear here.
    std::vector<std::string> forwarded_log() const;

private:
    void setup_routes();
    void watch_loop();
    void start_watcher();
    std::shared_ptr<const GateEngine> engine() const;
    void swap_engine(ForestModel model);

    GateServiceConfig cfg_;
    Featurizer featurizer_;

    mutable std::mutex engine_mutex_;
    std::shared_ptr<const GateEngine> engine_;

    std::unique_ptr<httplib::Server> server_;
    std::thread server_thread_;
    std::thread watch_thread_;
    std::atomic<bool> watching_{false};
    std::filesystem::file_time_type last_write_time_{};

    mutable std::mutex log_mutex_;
    std::vector<std::string> forwarded_;
};

} // namespace sensy
