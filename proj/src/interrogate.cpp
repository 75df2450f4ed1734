#include "sensy/interrogate.hpp"

#include <atomic>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "sensy/error.hpp"

namespace sensy {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Word counting and uncertainty detection
// ---------------------------------------------------------------------------

std::vector<std::string> default_uncertain_patterns() {
    return {"i cannot", "i can't", "i am unable", "i'm not sure", "as an ai"};
}

UncertainDetector::UncertainDetector(const std::vector<std::string>& patterns) {
    compiled_.reserve(patterns.size());
    for (const std::string& pattern : patterns) {
        try {
            compiled_.emplace_back(pattern, std::regex::icase | std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
            throw ConfigError("uncertain pattern \"" + pattern + "\": " + e.what());
        }
    }
}

bool UncertainDetector::matches(const std::string& text) const {
    for (const std::regex& re : compiled_) {
        if (std::regex_search(text, re)) return true;
    }
    return false;
}

bool detect_uncertain(const std::string& text, const UncertainDetector& detector) {
    return detector.matches(text);
}

std::string_view to_string(ResponseStatus s) {
    switch (s) {
    case ResponseStatus::ok: return "ok";
    case ResponseStatus::length_exceeded: return "length_exceeded";
    case ResponseStatus::uncertain: return "uncertain";
    case ResponseStatus::transport_error: return "transport_error";
    }
    return "transport_error";
}

std::optional<ResponseStatus> response_status_from_string(std::string_view name) {
    if (name == "ok") return ResponseStatus::ok;
    if (name == "length_exceeded") return ResponseStatus::length_exceeded;
    if (name == "uncertain") return ResponseStatus::uncertain;
    if (name == "transport_error") return ResponseStatus::transport_error;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Chat client
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kChatPath = "/v1/chat/completions";
constexpr const char* kProbePath = "/v1/models";

struct ChatReply {
    bool transport_ok = false;
    std::string text;
    std::string error;
};

ChatReply send_chat_request(httplib::Client& client, const InterrogationConfig& cfg,
                            const std::string& user_text) {
    json body;
    body["model"] = cfg.model_id;
    body["messages"] = json::array({
        json{{"role", "system"}, {"content", cfg.system_message}},
        json{{"role", "user"}, {"content", user_text}},
    });
    if (cfg.temperature.has_value()) {
        body["temperature"] = *cfg.temperature;
    }

    ChatReply reply;
    auto res = client.Post(kChatPath, body.dump(), "application/json");
    if (!res) {
        reply.error = "no response (" + httplib::to_string(res.error()) + ")";
        return reply;
    }
    if (res->status != 200) {
        reply.error = "HTTP " + std::to_string(res->status);
        return reply;
    }
    try {
        const json parsed = json::parse(res->body);
        reply.text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        reply.error = std::string("bad response JSON: ") + e.what();
        return reply;
    }
    reply.transport_ok = true;
    return reply;
}

// One repetition slot: retries until the reply passes both validity checks
// or the attempt budget runs out; the last reply is kept either way.
ResponseRecord run_slot(httplib::Client& client, const InterrogationConfig& cfg,
                        const UncertainDetector& detector, const std::string& user_text) {
    ResponseRecord record;
    for (int attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
        record.attempts = attempt;
        const ChatReply reply = send_chat_request(client, cfg, user_text);
        if (!reply.transport_ok) {
            record.text.clear();
            record.word_count = 0;
            record.status = ResponseStatus::transport_error;
            continue;
        }
        record.text = reply.text;
        record.word_count = count_words(reply.text);
        if (record.word_count > cfg.max_words) {
            record.status = ResponseStatus::length_exceeded;
            continue;
        }
        if (detector.matches(reply.text)) {
            record.status = ResponseStatus::uncertain;
            continue;
        }
        record.status = ResponseStatus::ok;
        return record;
    }
    return record;
}

} // namespace

std::vector<InterrogationRecord> interrogate_corpus(const Dataset& prompts,
                                                    const InterrogationConfig& cfg) {
    if (prompts.prompts.empty()) {
        throw ValidationError("interrogate_corpus: no prompts");
    }
    if (cfg.repetitions < 1 || cfg.max_attempts < 1 || cfg.max_words < 1 ||
        cfg.concurrency < 1) {
        throw ConfigError("interrogate_corpus: repetitions, max_attempts, max_words and "
                          "concurrency must be >= 1");
    }
    if (cfg.endpoint_url.empty()) {
        throw ConfigError("interrogate_corpus: endpoint URL not configured");
    }
    const UncertainDetector detector(cfg.uncertain_patterns);

    {
        httplib::Client probe_client(cfg.endpoint_url);
        probe_client.set_connection_timeout(cfg.timeout);
        probe_client.set_read_timeout(cfg.timeout);
        // Any HTTP response proves the endpoint is reachable.
        if (auto probe = probe_client.Get(kProbePath); !probe) {
            throw TransportError("interrogate_corpus: endpoint " + cfg.endpoint_url +
                                 " unreachable (" + httplib::to_string(probe.error()) + ")");
        }
    }

    // Records are preallocated by prompt index, so output order matches input
    // order no matter how prompts are distributed over workers. Slots run
    // sequentially per prompt so repeated generations are independent
    // requests in a stable order.
    std::vector<InterrogationRecord> records(prompts.prompts.size());
    const std::size_t workers = std::min<std::size_t>(
        static_cast<std::size_t>(cfg.concurrency), prompts.prompts.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;

    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            httplib::Client client(cfg.endpoint_url);
            client.set_connection_timeout(cfg.timeout);
            client.set_read_timeout(cfg.timeout);
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= prompts.prompts.size()) return;
                const Prompt& prompt = prompts.prompts[i];
                InterrogationRecord record;
                record.prompt_id = prompt.id;
                record.model_id = cfg.model_id;
                record.responses.reserve(static_cast<std::size_t>(cfg.repetitions));
                for (int slot = 0; slot < cfg.repetitions; ++slot) {
                    record.responses.push_back(run_slot(client, cfg, detector, prompt.text));
                }
                records[i] = std::move(record);
            }
        });
    }
    for (auto& t : pool) t.join();
    return records;
}

// ---------------------------------------------------------------------------
// Input / output files
// ---------------------------------------------------------------------------

Dataset load_interrogation_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("interrogation input: cannot open " + path.string());
    }
    ordered_json root;
    try {
        root = ordered_json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("interrogation input: ") + e.what());
    }
    if (!root.is_array()) {
        throw ParseError("interrogation input: expected a top-level array");
    }

    Dataset ds;
    ds.name = path.stem().string();
    std::set<std::string> seen;
    for (std::size_t i = 0; i < root.size(); ++i) {
        const std::string where = "record " + std::to_string(i);
        const auto& obj = root[i];
        if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
            !obj.contains("text") || !obj["text"].is_string()) {
            throw ParseError(where + ": expected {\"id\", \"text\", \"category\"}");
        }
        Prompt p;
        p.id = obj["id"].get<std::string>();
        p.text = obj["text"].get<std::string>();
        p.source = Source::external;
        if (obj.contains("category") && obj["category"].is_string() &&
            !obj["category"].get<std::string>().empty()) {
            const auto category = category_from_string(obj["category"].get<std::string>());
            if (!category) {
                throw ParseError(where + ": field \"category\": unknown category \"" +
                                 obj["category"].get<std::string>() + "\"");
            }
            p.label = Label::sensitive;
            p.categories.insert(*category);
        }
        validate_prompt(p, where);
        if (!seen.insert(p.id).second) {
            throw ValidationError(where + ": duplicate id \"" + p.id + "\"");
        }
        ds.prompts.push_back(std::move(p));
    }
    return ds;
}

std::string interrogation_to_json(const std::vector<InterrogationRecord>& records) {
    ordered_json root = ordered_json::array();
    for (const InterrogationRecord& record : records) {
        ordered_json obj;
        obj["prompt_id"] = record.prompt_id;
        obj["model_id"] = record.model_id;
        ordered_json responses = ordered_json::array();
        for (const ResponseRecord& response : record.responses) {
            ordered_json r;
            r["text"] = response.text;
            r["word_count"] = response.word_count;
            r["attempts"] = response.attempts;
            r["status"] = std::string(to_string(response.status));
            responses.push_back(std::move(r));
        }
        obj["responses"] = std::move(responses);
        root.push_back(std::move(obj));
    }
    return root.dump(2) + "\n";
}

std::vector<InterrogationRecord> parse_interrogation_json(const std::string& content) {
    ordered_json root;
    try {
        root = ordered_json::parse(content);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("interrogation records: ") + e.what());
    }
    if (!root.is_array()) {
        throw ParseError("interrogation records: expected a top-level array");
    }
    std::vector<InterrogationRecord> records;
    for (std::size_t i = 0; i < root.size(); ++i) {
        const std::string where = "record " + std::to_string(i);
        const auto& obj = root[i];
        InterrogationRecord record;
        try {
            record.prompt_id = obj.at("prompt_id").get<std::string>();
            record.model_id = obj.at("model_id").get<std::string>();
            for (const auto& r : obj.at("responses")) {
                ResponseRecord response;
                response.text = r.at("text").get<std::string>();
                response.word_count = r.at("word_count").get<int>();
                response.attempts = r.at("attempts").get<int>();
                const auto status =
                    response_status_from_string(r.at("status").get<std::string>());
                if (!status) {
                    throw ParseError(where + ": unknown status");
                }
                response.status = *status;
                record.responses.push_back(std::move(response));
            }
        } catch (const json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
        records.push_back(std::move(record));
    }
    return records;
}

void save_interrogation(const std::vector<InterrogationRecord>& records,
                        const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ParseError("interrogation output: cannot write " + path.string());
    }
    out << interrogation_to_json(records);
}

} // namespace sensy
