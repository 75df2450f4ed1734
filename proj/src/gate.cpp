#include "sensy/gate.hpp"

#include <httplib.h>
#include <json.hpp>

#include "sensy/error.hpp"

namespace sensy {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

std::string_view to_string(GateMode m) {
    switch (m) {
    case GateMode::annotate: return "annotate";
    case GateMode::block: return "block";
    case GateMode::allow: return "allow";
    }
    return "annotate";
}

std::optional<GateMode> gate_mode_from_string(std::string_view name) {
    if (name == "annotate") return GateMode::annotate;
    if (name == "block") return GateMode::block;
    if (name == "allow") return GateMode::allow;
    return std::nullopt;
}

GateVerdict classify_text(const std::string& text, const GateEngine& engine,
                          const Featurizer& featurizer, double threshold) {
    if (featurizer.dimension() != engine.model.feature_dim) {
        throw ConfigError("classify_text: featurizer dimension " +
                          std::to_string(featurizer.dimension()) +
                          " does not match model dimension " +
                          std::to_string(engine.model.feature_dim));
    }
    const auto started = std::chrono::steady_clock::now();

    GateVerdict verdict;
    verdict.probability = predict_proba(engine.model, featurizer.featurize(text));
    verdict.sensitive = verdict.probability >= threshold;
    verdict.categories = keyword_categories(tokenize(text), featurizer.keyword_index());
    verdict.model_fingerprint = engine.fingerprint;
    verdict.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::steady_clock::now() - started);
    return verdict;
}

GateVerdict classify_text(const std::string& text, const ForestModel& model,
                          const Featurizer& featurizer, double threshold) {
    return classify_text(text, GateEngine(model), featurizer, threshold);
}

// ---------------------------------------------------------------------------
// Service
// ---------------------------------------------------------------------------

namespace {

ordered_json verdict_to_json(const GateVerdict& verdict) {
    ordered_json out;
    out["sensitive"] = verdict.sensitive;
    out["probability"] = verdict.probability;
    ordered_json categories = ordered_json::array();
    for (Category c : verdict.categories) {
        categories.push_back(std::string(to_string(c)));
    }
    out["categories"] = std::move(categories);
    out["model_fingerprint"] = verdict.model_fingerprint;
    out["elapsed_us"] = verdict.elapsed.count();
    return out;
}

void write_error(httplib::Response& res, int status, const std::string& field,
                 const std::string& message) {
    ordered_json body;
    body["error"] = {{"field", field}, {"message", message}};
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

// Extracts a non-empty "text" field; writes a 400 and returns nullopt on any
// shape problem.
std::optional<std::string> parse_text_body(const httplib::Request& req,
                                           httplib::Response& res) {
    json body;
    try {
        body = json::parse(req.body);
    } catch (const json::parse_error& e) {
        write_error(res, 400, "(body)", std::string("invalid JSON: ") + e.what());
        return std::nullopt;
    }
    if (!body.is_object()) {
        write_error(res, 400, "(body)", "expected a JSON object");
        return std::nullopt;
    }
    if (!body.contains("text") || !body["text"].is_string()) {
        write_error(res, 400, "text", "required string field");
        return std::nullopt;
    }
    std::string text = body["text"].get<std::string>();
    if (trim(text).empty()) {
        write_error(res, 400, "text", "must be non-empty");
        return std::nullopt;
    }
    return text;
}

} // namespace

GateService::GateService(GateServiceConfig cfg, Featurizer featurizer)
    : cfg_(std::move(cfg)), featurizer_(std::move(featurizer)),
      server_(std::make_unique<httplib::Server>()) {
    if (cfg_.model_path.empty()) {
        throw ConfigError("gate service: model path not configured");
    }
    swap_engine(load_model(cfg_.model_path));
    std::error_code ec;
    last_write_time_ = std::filesystem::last_write_time(cfg_.model_path, ec);
    setup_routes();
}

GateService::GateService(GateServiceConfig cfg, Featurizer featurizer, ForestModel model)
    : cfg_(std::move(cfg)), featurizer_(std::move(featurizer)),
      server_(std::make_unique<httplib::Server>()) {
    swap_engine(std::move(model));
    setup_routes();
}

GateService::~GateService() { stop(); }

std::shared_ptr<const GateEngine> GateService::engine() const {
    std::lock_guard lock(engine_mutex_);
    return engine_;
}

void GateService::swap_engine(ForestModel model) {
    if (featurizer_.dimension() != model.feature_dim) {
        throw ConfigError("gate service: featurizer dimension " +
                          std::to_string(featurizer_.dimension()) +
                          " does not match model dimension " +
                          std::to_string(model.feature_dim));
    }
    auto next = std::make_shared<const GateEngine>(std::move(model));
    std::lock_guard lock(engine_mutex_);
    engine_ = std::move(next);
}

std::string GateService::fingerprint() const { return engine()->fingerprint; }

void GateService::reload_now() {
    if (cfg_.model_path.empty()) return;
    swap_engine(load_model(cfg_.model_path));
}

std::vector<std::string> GateService::forwarded_log() const {
    std::lock_guard lock(log_mutex_);
    return forwarded_;
}

void GateService::setup_routes() {
    server_->set_payload_max_length(cfg_.max_body_bytes); // 413 beyond this

    server_->Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
        ordered_json body;
        body["status"] = "ok";
        body["model_fingerprint"] = engine()->fingerprint;
        res.set_content(body.dump(), "application/json");
    });

    server_->Post("/v1/classify", [this](const httplib::Request& req, httplib::Response& res) {
        const auto text = parse_text_body(req, res);
        if (!text) return;
        const auto snapshot = engine();
        const GateVerdict verdict =
            classify_text(*text, *snapshot, featurizer_, cfg_.default_policy.threshold);
        res.set_content(verdict_to_json(verdict).dump(), "application/json");
    });

    server_->Post("/v1/gate", [this](const httplib::Request& req, httplib::Response& res) {
        const auto text = parse_text_body(req, res);
        if (!text) return;

        GatePolicy policy = cfg_.default_policy;
        {
            json body = json::parse(req.body); // parse validated above
            if (body.contains("policy")) {
                const auto& p = body["policy"];
                if (!p.is_object()) {
                    write_error(res, 400, "policy", "expected an object");
                    return;
                }
                if (!p.contains("mode") || !p["mode"].is_string()) {
                    write_error(res, 400, "policy.mode", "required string field");
                    return;
                }
                const auto mode = gate_mode_from_string(p["mode"].get<std::string>());
                if (!mode) {
                    write_error(res, 400, "policy.mode",
                                "must be one of annotate, block, allow");
                    return;
                }
                policy.mode = *mode;
                if (p.contains("threshold")) {
                    if (!p["threshold"].is_number()) {
                        write_error(res, 400, "policy.threshold", "must be a number");
                        return;
                    }
                    const double threshold = p["threshold"].get<double>();
                    if (threshold < 0.0 || threshold > 1.0) {
                        write_error(res, 400, "policy.threshold", "must be in [0, 1]");
                        return;
                    }
                    policy.threshold = threshold;
                } else if (*mode == GateMode::block) {
                    write_error(res, 400, "policy.threshold",
                                "block mode requires an explicit threshold");
                    return;
                }
            }
        }

        const auto snapshot = engine();
        const GateVerdict verdict = classify_text(*text, *snapshot, featurizer_, policy.threshold);

        std::string action;
        bool forwarded = false;
        switch (policy.mode) {
        case GateMode::annotate:
            action = "forwarded-annotation";
            forwarded = true;
            res.set_header("X-Sensy-Probability", std::to_string(verdict.probability));
            break;
        case GateMode::block:
            if (verdict.sensitive) {
                action = "blocked";
            } else {
                action = "allowed";
                forwarded = true;
            }
            break;
        case GateMode::allow:
            action = "allowed";
            forwarded = true;
            break;
        }
        if (forwarded) {
            std::lock_guard lock(log_mutex_);
            forwarded_.push_back(*text);
        }

        ordered_json out = verdict_to_json(verdict);
        out["action"] = action;
        res.set_content(out.dump(), "application/json");
    });
}

void GateService::start_watcher() {
    if (!cfg_.watch_model || cfg_.model_path.empty()) return;
    watching_ = true;
    watch_thread_ = std::thread([this] { watch_loop(); });
}

void GateService::watch_loop() {
    while (watching_) {
        std::this_thread::sleep_for(cfg_.watch_interval);
        std::error_code ec;
        const auto mtime = std::filesystem::last_write_time(cfg_.model_path, ec);
        if (ec || mtime == last_write_time_) continue;
        last_write_time_ = mtime;
        try {
            swap_engine(load_model(cfg_.model_path));
        } catch (const Error&) {
            // Keep serving on the previous model; a partially written file
            // will be picked up on the next tick.
        }
    }
}

int GateService::start() {
    int port = cfg_.port;
    if (port == 0) {
        port = server_->bind_to_any_port(cfg_.host);
        if (port < 0) {
            throw ConfigError("gate service: cannot bind to " + cfg_.host);
        }
    } else if (!server_->bind_to_port(cfg_.host, port)) {
        throw ConfigError("gate service: cannot bind to " + cfg_.host + ":" +
                          std::to_string(port));
    }
    server_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    start_watcher();
    return port;
}

void GateService::run() {
    start_watcher();
    if (!server_->listen(cfg_.host, cfg_.port)) {
        watching_ = false;
        if (watch_thread_.joinable()) watch_thread_.join();
        throw ConfigError("gate service: cannot listen on " + cfg_.host + ":" +
                          std::to_string(cfg_.port));
    }
}

void GateService::stop() {
    watching_ = false;
    if (server_ && server_->is_running()) {
        server_->stop();
    }
    if (server_thread_.joinable()) server_thread_.join();
    if (watch_thread_.joinable()) watch_thread_.join();
}

} // namespace sensy
