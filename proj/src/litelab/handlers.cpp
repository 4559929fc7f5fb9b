#include "litelab/handlers.h"

namespace litelab {

HandlerRegistry& HandlerRegistry::instance() {
  static HandlerRegistry* reg = [] {
    auto* r = new HandlerRegistry();
    register_builtin_handlers(*r);
    return r;
  }();
  return *reg;
}

void HandlerRegistry::add(const std::string& name, HandlerFactory f) {
  entries_.emplace_back(name, std::move(f));
}

bool HandlerRegistry::has(const std::string& name) const {
  for (const auto& [n, _] : entries_)
    if (n == name) return true;
  return false;
}

std::unique_ptr<IHandler> HandlerRegistry::create(const std::string& name,
                                                  const nlohmann::json& params,
                                                  std::string* err) const {
  for (const auto& [n, f] : entries_)
    if (n == name) return f(params);
  if (err) *err = "unresolvable ihandler '" + name + "'";
  return nullptr;
}

std::vector<std::string> HandlerRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [n, _] : entries_) out.push_back(n);
  return out;
}

namespace {

class CountHandler : public IHandler {
 public:
  explicit CountHandler(std::string label) : label_(std::move(label)) {
    counter_ = "ihandler." + label_ + ".count";
  }
  std::string_view name() const override { return "count"; }
  HandlerResult process(Packet&, SRouterCore& r) override {
    r.bump_counter(counter_, 1);
    return {};
  }

 private:
  std::string label_;
  std::string counter_;
};

class DropAllHandler : public IHandler {
 public:
  std::string_view name() const override { return "dropall"; }
  HandlerResult process(Packet&, SRouterCore&) override { return {true, "handler:dropall"}; }
};

class AppendByteHandler : public IHandler {
 public:
  explicit AppendByteHandler(char byte) : byte_(byte) {}
  std::string_view name() const override { return "appendbyte"; }
  HandlerResult process(Packet& p, SRouterCore&) override {
    if (p.payload.size() < Packet::kMaxPayload) p.payload += byte_;
    return {};
  }

 private:
  char byte_;
};

}  // namespace

void register_builtin_handlers(HandlerRegistry& reg) {
  reg.add("count", [](const nlohmann::json& params) {
    std::string label = params.value("label", std::string("count"));
    return std::make_unique<CountHandler>(label);
  });
  reg.add("dropall",
          [](const nlohmann::json&) { return std::make_unique<DropAllHandler>(); });
  reg.add("appendbyte", [](const nlohmann::json& params) {
    std::string b = params.value("byte", std::string("x"));
    return std::make_unique<AppendByteHandler>(b.empty() ? 'x' : b[0]);
  });
}

}  // namespace litelab
