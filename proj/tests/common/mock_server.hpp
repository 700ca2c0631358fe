#ifndef TRAITSCORE_TESTS_MOCK_SERVER_HPP
#define TRAITSCORE_TESTS_MOCK_SERVER_HPP

// Local chat-completions stand-in for pipeline tests. The reply function
// maps the incoming user prompt to (status, assistant text); every request
// is captured with its arrival time for retry/backoff assertions.

#include <chrono>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

namespace traitscore::testing {

struct CapturedRequest {
  std::string prompt;
  nlohmann::json body;
  std::string authorization;
  std::chrono::steady_clock::time_point arrived;
};

class MockServer {
 public:
  using Reply = std::function<std::pair<int, std::string>(const std::string& prompt, int request_no)>;

  explicit MockServer(Reply reply) : reply_(std::move(reply)) {
    server_.Post("/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
      std::string prompt;
      if (body.is_object() && body.contains("messages") && !body["messages"].empty()) {
        prompt = body["messages"][0].value("content", "");
      }
      int request_no;
      {
        std::lock_guard<std::mutex> lock(mutex_);
        requests_.push_back({prompt, body, req.get_header_value("Authorization"),
                             std::chrono::steady_clock::now()});
        request_no = static_cast<int>(requests_.size());
      }
      const auto [status, text] = reply_(prompt, request_no);
      res.status = status;
      if (status >= 200 && status < 300) {
        nlohmann::json payload;
        payload["choices"] = nlohmann::json::array(
            {nlohmann::json{{"message", {{"role", "assistant"}, {"content", text}}}}});
        res.set_content(payload.dump(), "application/json");
      } else {
        res.set_content(text, "text/plain");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int port() const { return port_; }

  std::vector<CapturedRequest> requests() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return requests_;
  }
  int request_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return static_cast<int>(requests_.size());
  }

 private:
  Reply reply_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mutex_;
  std::vector<CapturedRequest> requests_;
};

// Canonical well-formed reply body.
inline std::string score_json(const std::string& label, double confidence,
                              const std::string& feedback = "reasoned feedback") {
  nlohmann::json obj{{"feedback", feedback}, {"score", label}, {"confidence", confidence}};
  return obj.dump();
}

}  // namespace traitscore::testing

#endif  // TRAITSCORE_TESTS_MOCK_SERVER_HPP
