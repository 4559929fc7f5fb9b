#include "litelab/sim.h"

#include <cassert>

namespace litelab {

void SimScheduler::at(usec_t t, std::function<void()> fn) {
  q_.push(Ev{t < now_ ? now_ : t, seq_++, std::move(fn)});
}

bool SimScheduler::step() {
  if (q_.empty()) return false;
  Ev ev = std::move(const_cast<Ev&>(q_.top()));
  q_.pop();
  now_ = ev.t;
  ev.fn();
  return true;
}

bool SimScheduler::run_until(usec_t t_end) {
  while (!q_.empty() && q_.top().t <= t_end)
    if (!step()) break;
  if (now_ < t_end) now_ = t_end;
  return !q_.empty();
}

void SimScheduler::run_all(usec_t hard_stop) {
  while (!q_.empty() && q_.top().t <= hard_stop) step();
}

struct SimNet::SimApi : AppApi {
  SimNet* net = nullptr;
  Vid vid;

  const Vid& self() const override { return vid; }
  usec_t now() const override { return net->sched_.now(); }
  bool send(const Vid& dst, std::string payload, std::string* err) override {
    auto& r = net->routers_.at(vid);
    bool ok = r.core->app_send(dst, std::move(payload), net->sched_.now(), err);
    net->pump(vid);
    return ok;
  }
  void schedule(usec_t at, int64_t token) override {
    Vid v = vid;
    net->sched_.at(at, [this, v, token] {
      auto& r = net->routers_.at(v);
      if (r.app) r.app->on_timer(token, *r.api);
      net->pump(v);
    });
  }
  RouterSnapshot introspect() override { return net->routers_.at(vid).core->introspect(); }
  void bump(const std::string& counter, int64_t d) override {
    net->routers_.at(vid).core->bump_counter(counter, d);
  }
  void finish() override {
    auto& r = net->routers_.at(vid);
    if (!r.app_finished) {
      r.app_finished = true;
      net->apps_running_--;
    }
  }
};

SimNet::SimNet(const Topology& t, const RouteSet& routes, Options opt) : opt_(opt) {
  for (const auto& rd : t.routers) {
    SRouterConfig cfg;
    cfg.self = rd.vid;
    cfg.default_ttl = opt.default_ttl;
    cfg.cqueue_len = opt.cqueue_len;
    cfg.seed = opt.seed;
    cfg.log_events = opt.log_events;
    Router r;
    r.core = std::make_unique<SRouterCore>(cfg);
    r.api = std::make_unique<SimApi>();
    r.api->net = this;
    r.api->vid = rd.vid;
    routers_.emplace(rd.vid, std::move(r));
  }
  for (const auto& rd : t.routers) {
    auto& r = routers_.at(rd.vid);
    for (const auto& nbr : t.neighbors(rd.vid))
      r.core->add_link(nbr, link_dir_spec(t, rd.vid, nbr));
    if (auto it = routes.tables.find(rd.vid); it != routes.tables.end())
      r.core->set_table(it->second);
  }
}

void SimNet::attach_app(const Vid& v, std::unique_ptr<App> app) {
  auto& r = routers_.at(v);
  r.app = std::move(app);
  apps_running_++;
  sched_.at(sched_.now(), [this, v] {
    auto& rr = routers_.at(v);
    if (rr.app) rr.app->on_start(*rr.api);
    pump(v);
  });
}

bool SimNet::add_handler(const Vid& v, std::unique_ptr<IHandler> h, int position,
                         std::string* err) {
  return routers_.at(v).core->register_handler(std::move(h), position, err);
}

void SimNet::pump(const Vid& v) {
  auto& r = routers_.at(v);
  r.core->advance(sched_.now());
  auto& tx = r.core->pending_tx();
  for (auto& out : tx) {
    Vid from = v, to = out.neighbor;
    // Wire transit is immediate in virtual time; the event queue keeps
    // causal order deterministic.
    Packet pkt = std::move(out.pkt);
    sched_.at(sched_.now(), [this, from, to, pkt = std::move(pkt)]() mutable {
      auto it = routers_.find(to);
      if (it == routers_.end()) return;
      it->second.core->on_ingress(from, std::move(pkt), sched_.now());
      pump(to);
    });
  }
  tx.clear();
  auto& cq = r.core->cqueue();
  while (!cq.empty() && r.app) {
    Packet p = std::move(cq.front());
    cq.pop_front();
    r.app->on_packet(std::move(p), *r.api);
  }
  if (opt_.log_events) {
    for (auto& rec : r.core->pending_logs()) trace_.push_back(v.str() + "," + rec.csv());
    r.core->pending_logs().clear();
  }
  arm_wake(v);
}

void SimNet::arm_wake(const Vid& v) {
  auto& r = routers_.at(v);
  auto dl = r.core->next_deadline();
  if (!dl) return;
  usec_t t = std::max(*dl, sched_.now());
  auto it = armed_wake_.find(v);
  if (it != armed_wake_.end() && it->second <= t && it->second >= sched_.now()) return;
  armed_wake_[v] = t;
  sched_.at(t, [this, v, t] {
    auto it2 = armed_wake_.find(v);
    if (it2 != armed_wake_.end() && it2->second == t) armed_wake_.erase(it2);
    pump(v);
  });
}

void SimNet::run_until(usec_t t) { sched_.run_until(t); }

void SimNet::run_all(usec_t hard_stop) { sched_.run_all(hard_stop); }

bool SimNet::migrate_noop(const Vid& v, std::string* err) {
  auto& r = routers_.at(v);
  r.core->pause_begin(sched_.now());
  pump(v);
  sched_.run_until(sched_.now());  // pause/ack exchange
  if (!r.core->pause_complete()) {
    if (err) *err = "pause did not complete";
    return false;
  }
  std::string blob = r.core->serialize_state(sched_.now());

  // Rebuild the core from config + link specs, exactly as a target agent
  // re-instantiates a migrated router, then restore the serialized state.
  auto fresh = std::make_unique<SRouterCore>(r.core->config());
  for (const auto& nbr : r.core->link_neighbors())
    fresh->add_link(nbr, *r.core->link_spec(nbr));
  fresh->set_table(r.core->table());
  fresh->adopt_chain(r.core->release_chain());
  if (!fresh->restore_state(blob, sched_.now(), err)) return false;
  r.core = std::move(fresh);
  r.core->emit_resume(sched_.now());
  pump(v);
  return true;
}

std::string SimNet::trace_text() const {
  std::string out = "router,timestamp_us,event,link,src,dst,size,reason\n";
  for (const auto& line : trace_) {
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace litelab
