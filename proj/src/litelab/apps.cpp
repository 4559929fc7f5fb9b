#include "litelab/apps.h"

#include <algorithm>
#include <cstring>

namespace litelab {

AppRegistry& AppRegistry::instance() {
  static AppRegistry* reg = [] {
    auto* r = new AppRegistry();
    register_builtin_apps(*r);
    return r;
  }();
  return *reg;
}

void AppRegistry::add(const std::string& name, AppFactory f) {
  entries_.emplace_back(name, std::move(f));
}

bool AppRegistry::has(const std::string& name) const {
  for (const auto& [n, _] : entries_)
    if (n == name) return true;
  return false;
}

std::unique_ptr<App> AppRegistry::create(const std::string& name, const nlohmann::json& params,
                                         std::string* err) const {
  for (const auto& [n, f] : entries_)
    if (n == name) return f(params);
  if (err) *err = "unknown application '" + name + "'";
  return nullptr;
}

std::vector<std::string> AppRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [n, _] : entries_) out.push_back(n);
  return out;
}

namespace {

class EchoApp : public App {
 public:
  explicit EchoApp(int64_t max) : max_(max) {}
  void on_packet(Packet p, AppApi& api) override {
    if (max_ >= 0 && echoed_ >= max_) return;
    api.send(p.src, std::move(p.payload));
    api.bump("app.echoed", 1);
    echoed_++;
    if (max_ >= 0 && echoed_ >= max_) api.finish();
  }

 private:
  int64_t max_;
  int64_t echoed_ = 0;
};

class BlastApp : public App {
 public:
  BlastApp(Vid dst, int64_t count, size_t size, double rate_pps)
      : dst_(std::move(dst)), count_(count), size_(size), rate_pps_(rate_pps) {}
  void on_start(AppApi& api) override {
    start_ = api.now();
    pump(api);
  }
  void on_timer(int64_t, AppApi& api) override { pump(api); }
  void on_packet(Packet, AppApi&) override {}

 private:
  void pump(AppApi& api) {
    if (rate_pps_ <= 0) {
      while (sent_ < count_) send_one(api);
      api.finish();
      return;
    }
    usec_t interval = (usec_t)(1e6 / rate_pps_);
    while (sent_ < count_) {
      usec_t due = start_ + sent_ * interval;
      if (due > api.now()) {
        api.schedule(due, 0);
        return;
      }
      send_one(api);
    }
    api.finish();
  }
  void send_one(AppApi& api) {
    std::string payload(size_, 'b');
    if (api.send(dst_, std::move(payload))) api.bump("app.sent", 1);
    sent_++;
  }
  Vid dst_;
  int64_t count_;
  size_t size_;
  double rate_pps_;
  int64_t sent_ = 0;
  usec_t start_ = 0;
};

class SinkApp : public App {
 public:
  explicit SinkApp(int64_t expect) : expect_(expect) {}
  void on_packet(Packet, AppApi& api) override {
    api.bump("app.recv", 1);
    if (expect_ > 0 && ++seen_ >= expect_) api.finish();
  }

 private:
  int64_t expect_;
  int64_t seen_ = 0;
};

class PingerApp : public App {
 public:
  PingerApp(Vid dst, int64_t count, usec_t interval_us, size_t size)
      : dst_(std::move(dst)), count_(count), interval_(interval_us), size_(std::max<size_t>(size, 16)) {}
  void on_start(AppApi& api) override {
    start_ = api.now();
    pump(api);
  }
  void on_timer(int64_t, AppApi& api) override { pump(api); }
  void on_packet(Packet p, AppApi& api) override {
    if (p.payload.size() < 16) return;
    int64_t ts;
    memcpy(&ts, p.payload.data() + 8, 8);
    int64_t rtt = api.now() - ts;
    api.bump("app.rtt_count", 1);
    api.bump("app.rtt_sum_us", rtt);
    got_++;
    if (got_ >= count_) api.finish();
  }

 private:
  void pump(AppApi& api) {
    while (sent_ < count_) {
      usec_t due = start_ + sent_ * interval_;
      if (due > api.now()) {
        api.schedule(due, 0);
        return;
      }
      std::string payload(size_, 'p');
      int64_t seq = sent_, ts = api.now();
      memcpy(payload.data(), &seq, 8);
      memcpy(payload.data() + 8, &ts, 8);
      if (api.send(dst_, std::move(payload))) api.bump("app.sent", 1);
      sent_++;
    }
  }
  Vid dst_;
  int64_t count_;
  usec_t interval_;
  size_t size_;
  int64_t sent_ = 0, got_ = 0;
  usec_t start_ = 0;
};

}  // namespace

void register_builtin_apps(AppRegistry& reg) {
  reg.add("echo", [](const nlohmann::json& p) {
    return std::make_unique<EchoApp>(p.value("max", (int64_t)-1));
  });
  reg.add("blast", [](const nlohmann::json& p) {
    return std::make_unique<BlastApp>(Vid(p.value("dst", std::string())),
                                      p.value("count", (int64_t)100), p.value("size", (size_t)64),
                                      p.value("rate_pps", 0.0));
  });
  reg.add("sink", [](const nlohmann::json& p) {
    return std::make_unique<SinkApp>(p.value("expect", (int64_t)0));
  });
  reg.add("pinger", [](const nlohmann::json& p) {
    return std::make_unique<PingerApp>(Vid(p.value("dst", std::string())),
                                       p.value("count", (int64_t)100),
                                       p.value("interval_us", (int64_t)10000),
                                       p.value("size", (size_t)64));
  });
}

}  // namespace litelab
