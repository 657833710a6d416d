#pragma once

// Hosts one httplib::Server on a loopback ephemeral port with a background
// listen thread. Also carries the failure-injection switch the harness flips:
// Stop closes the listener, Hang parks handlers until the client times out,
// Error500 answers every request with HTTP 500.

#include <atomic>
#include <chrono>
#include <functional>
#include <string>
#include <thread>

#ifndef CPPHTTPLIB_THREAD_POOL_COUNT
#define CPPHTTPLIB_THREAD_POOL_COUNT 8
#endif
#include <httplib.h>

#include "fedgate/errors.hpp"

namespace fedgate {

enum class FailureMode { None, Stop, Hang, Error500 };

class ServiceHost {
 public:
  using Router = std::function<void(httplib::Server&)>;

  explicit ServiceHost(std::string host = "127.0.0.1") : host_(std::move(host)) {
    server_.set_tcp_nodelay(true);
    server_.set_pre_routing_handler(
        [this](const httplib::Request&, httplib::Response& res) {
          switch (failure_.load()) {
            case FailureMode::Error500:
              res.status = 500;
              res.set_content("injected failure", "text/plain");
              return httplib::Server::HandlerResponse::Handled;
            case FailureMode::Hang: {
              auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(30);
              while (failure_.load() == FailureMode::Hang && !draining_.load() &&
                     std::chrono::steady_clock::now() < deadline)
                std::this_thread::sleep_for(std::chrono::milliseconds(20));
              res.status = 503;
              res.set_content("was hung", "text/plain");
              return httplib::Server::HandlerResponse::Handled;
            }
            default:
              return httplib::Server::HandlerResponse::Unhandled;
          }
        });
  }

  ~ServiceHost() { stop(); }

  ServiceHost(const ServiceHost&) = delete;
  ServiceHost& operator=(const ServiceHost&) = delete;

  httplib::Server& server() { return server_; }

  // Binds the given port (0 = ephemeral) and serves until stop(). Returns
  // the bound port.
  int start(int port = 0) {
    if (port > 0) {
      if (!server_.bind_to_port(host_, port))
        fail(Err::ScenarioError, "could not bind port " + std::to_string(port));
      port_ = port;
    } else {
      port_ = server_.bind_to_any_port(host_);
      if (port_ <= 0) fail(Err::ScenarioError, "could not bind a loopback port");
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    running_ = true;
    return port_;
  }

  void stop() {
    if (!running_) return;
    draining_ = true;
    server_.stop();
    if (thread_.joinable()) thread_.join();
    running_ = false;
  }

  bool running() const { return running_; }
  int port() const { return port_; }
  std::string base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

  void set_failure(FailureMode mode) {
    if (mode == FailureMode::Stop) {
      stop();
      return;
    }
    failure_ = mode;
  }

  FailureMode failure() const { return failure_.load(); }

 private:
  std::string host_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  bool running_ = false;
  std::atomic<bool> draining_{false};
  std::atomic<FailureMode> failure_{FailureMode::None};
};

}  // namespace fedgate
