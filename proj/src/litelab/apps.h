#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "litelab/srouter.h"

namespace litelab {

// Backend-supplied surface a user application talks to. Inline apps run on
// the router's own execution context (event loop or router thread); the
// blocking send/recv pair lives in the real-time backend's SyncApp adapter.
class AppApi {
 public:
  virtual ~AppApi() = default;
  virtual const Vid& self() const = 0;
  virtual usec_t now() const = 0;
  virtual bool send(const Vid& dst, std::string payload, std::string* err = nullptr) = 0;
  // One-shot timer; token comes back in on_timer.
  virtual void schedule(usec_t at, int64_t token) = 0;
  virtual RouterSnapshot introspect() = 0;
  virtual void bump(const std::string& counter, int64_t d) = 0;
  // Marks this app finished; a job completes early when every app finished.
  virtual void finish() = 0;
};

// Event-driven user application.
class App {
 public:
  virtual ~App() = default;
  virtual void on_start(AppApi&) {}
  virtual void on_packet(Packet p, AppApi&) = 0;
  virtual void on_timer(int64_t token, AppApi&) {}
};

using AppFactory = std::function<std::unique_ptr<App>(const nlohmann::json& params)>;

class AppRegistry {
 public:
  static AppRegistry& instance();
  void add(const std::string& name, AppFactory f);
  bool has(const std::string& name) const;
  std::unique_ptr<App> create(const std::string& name, const nlohmann::json& params,
                              std::string* err) const;
  std::vector<std::string> names() const;

 private:
  std::vector<std::pair<std::string, AppFactory>> entries_;
};

// Built-ins:
//   echo   — returns every data packet to its source; params: {max}
//   blast  — sends `count` packets of `size` payload bytes to `dst` at
//            `rate_pps` (0 = unpaced); counters app.sent
//   sink   — counts receptions in app.recv; finishes at `expect` when given
//   pinger — paced request/response probe against an echo peer; counters
//            app.rtt_count / app.rtt_sum_us / app.rtt_max_us
void register_builtin_apps(AppRegistry& reg);

}  // namespace litelab
