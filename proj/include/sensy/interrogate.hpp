#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "sensy/corpus.hpp"
#include "sensy/text.hpp"

namespace sensy {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

// Wording is configurable; this default asks for concise, direct answers.
inline constexpr const char* kDefaultSystemMessage =
    "Answer the user's question directly and concisely in at most 160 words. "
    "Do not include meta-commentary.";

std::vector<std::string> default_uncertain_patterns();

struct InterrogationConfig {
    std::string endpoint_url;  // origin, e.g. http://127.0.0.1:1234
    std::string model_id;
    std::string system_message = kDefaultSystemMessage;
    int repetitions = 3;
    int max_words = 160;
    int max_attempts = 3;
    std::vector<std::string> uncertain_patterns = default_uncertain_patterns();
    std::chrono::milliseconds timeout{120000};
    std::optional<double> temperature; // endpoint default when unset
    // Worker-pool width over prompts. Repetition slots for one prompt are
    // always sequential; records come out in input order regardless.
    int concurrency = 1;
};

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

enum class ResponseStatus { ok, length_exceeded, uncertain, transport_error };

std::string_view to_string(ResponseStatus s);
std::optional<ResponseStatus> response_status_from_string(std::string_view name);

struct ResponseRecord {
    std::string text;
    int word_count = 0;
    int attempts = 0;
    ResponseStatus status = ResponseStatus::transport_error;
};

struct InterrogationRecord {
    std::string prompt_id;
    std::string model_id;
    std::vector<ResponseRecord> responses; // exactly `repetitions` entries
};

// ---------------------------------------------------------------------------
// Validity checks
// ---------------------------------------------------------------------------

// Case-insensitive regex matcher for "uncertain answer" detection. Patterns
// are compiled once; a bad pattern is a configuration error at startup.
class UncertainDetector {
public:
    explicit UncertainDetector(const std::vector<std::string>& patterns);

    bool matches(const std::string& text) const;

private:
    std::vector<std::regex> compiled_;
};

bool detect_uncertain(const std::string& text, const UncertainDetector& detector);

// ---------------------------------------------------------------------------
// Protocol
// ---------------------------------------------------------------------------

// Poses every prompt `repetitions` times to the chat endpoint. A reply over
// the word cap or matching an uncertain pattern is retried up to max_attempts;
// the last reply is kept with its failure status. Emits exactly
// |prompts| * repetitions response records, in prompt order.
// Fatal if the endpoint does not answer a health probe at startup.
std::vector<InterrogationRecord> interrogate_corpus(const Dataset& prompts,
                                                    const InterrogationConfig& cfg);

// Input file: array of {"id", "text", "category"}.
Dataset load_interrogation_input(const std::filesystem::path& path);

// Output file: array of interrogation records. Serialization is byte-stable.
std::string interrogation_to_json(const std::vector<InterrogationRecord>& records);
std::vector<InterrogationRecord> parse_interrogation_json(const std::string& content);
void save_interrogation(const std::vector<InterrogationRecord>& records,
                        const std::filesystem::path& path);

} // namespace sensy
