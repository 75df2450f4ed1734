#pragma once

// In-process mock of the local chat-completions endpoint, scriptable per
// request. Also doubles as a mock embeddings endpoint.

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace sensy::test {

class MockLlmServer {
public:
    // Returns the reply text for the n-th chat request overall (0-based),
    // given the user message.
    using ReplyFn = std::function<std::string(std::size_t request_index,
                                              const std::string& user_text)>;

    explicit MockLlmServer(ReplyFn reply) : reply_(std::move(reply)) {
        server_.Get("/v1/models", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"data":[{"id":"mock"}]})", "application/json");
        });
        server_.Post("/v1/chat/completions",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         const auto body = nlohmann::json::parse(req.body);
                         const std::string user =
                             body.at("messages").at(1).at("content").get<std::string>();
                         const std::size_t index = request_count_.fetch_add(1);
                         nlohmann::json out;
                         out["choices"] = {
                             {{"message",
                               {{"role", "assistant"}, {"content", reply_(index, user)}}}}};
                         res.set_content(out.dump(), "application/json");
                     });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockLlmServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    std::size_t request_count() const { return request_count_.load(); }

private:
    ReplyFn reply_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<std::size_t> request_count_{0};
};

// Mock embeddings endpoint returning a fixed-length vector per input text.
class MockEmbedServer {
public:
    explicit MockEmbedServer(std::size_t reply_dimension)
        : reply_dimension_(reply_dimension) {
        server_.Post("/v1/embeddings",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         const auto body = nlohmann::json::parse(req.body);
                         nlohmann::json data = nlohmann::json::array();
                         for (const auto& text : body.at("input")) {
                             std::vector<double> v(reply_dimension_, 0.0);
                             if (!v.empty()) {
                                 v[0] = static_cast<double>(text.get<std::string>().size());
                             }
                             data.push_back({{"embedding", v}});
                         }
                         nlohmann::json out;
                         out["data"] = std::move(data);
                         res.set_content(out.dump(), "application/json");
                     });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockEmbedServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string url() const {
        return "http://127.0.0.1:" + std::to_string(port_) + "/v1/embeddings";
    }

private:
    std::size_t reply_dimension_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

// Deterministic word strings used to script length-limit scenarios.
inline std::string words(std::size_t n, const std::string& word = "word") {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) out += ' ';
        out += word;
    }
    return out;
}

} // namespace sensy::test
