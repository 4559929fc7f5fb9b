#include "litelab/srouter.h"

#include <algorithm>
#include <cmath>

namespace litelab {

namespace {
constexpr int64_t kMtuBytes = 1600;  // shaper burst: one MTU
constexpr int64_t kMbPerByte = 8000;

int64_t wire_mb(const Packet& p) { return (int64_t)p.wire_size() * kMbPerByte; }

usec_t ceil_div_rate(int64_t mb, double kbps) {
  // millibits / (millibits per microsecond), rounded up
  double us = (double)mb / kbps;
  return (usec_t)std::ceil(us);
}
}  // namespace

LinkDirSpec LinkDirSpec::from(const LinkSpec& l) {
  LinkDirSpec d;
  d.delay_us = (usec_t)std::llround(l.delay_ms * 1000.0);
  d.loss_rate = l.loss_rate;
  d.bandwidth_kbps = l.bandwidth_kbps;
  d.queue_len = l.queue_len;
  d.policy = l.policy;
  d.red = l.red;
  return d;
}

LinkDirSpec link_dir_spec(const Topology& t, const Vid& from, const Vid& to) {
  // Prefer the declaration oriented from->to (per-direction override),
  // otherwise use the reverse declaration's symmetric attributes.
  for (const auto& l : t.links)
    if (l.a == from && l.b == to) return LinkDirSpec::from(l);
  for (const auto& l : t.links)
    if (l.a == to && l.b == from) return LinkDirSpec::from(l);
  return {};
}

const char* drop_reason_name(DropReason r) {
  switch (r) {
    case DropReason::kQueueFull: return "queue_full";
    case DropReason::kRed: return "red";
    case DropReason::kLoss: return "loss";
    case DropReason::kTtl: return "ttl";
    case DropReason::kNoRoute: return "no_route";
    case DropReason::kHandler: return "handler";
    case DropReason::kMalformed: return "malformed";
    case DropReason::kCqueueFull: return "cqueue_full";
  }
  return "?";
}

int64_t DropStats::total() const {
  int64_t t = 0;
  for (auto v : by_reason) t += v;
  return t;
}

LinkQueue::LinkQueue(int max_len, QueuePolicy policy, RedParams red)
    : max_len_(max_len), policy_(policy), red_(red) {}

bool LinkQueue::enqueue(Packet&& p, Rng& rng, DropReason* reason) {
  if (policy_ == QueuePolicy::kRed) {
    avg_ = (1.0 - red_.w_q) * avg_ + red_.w_q * (double)q_.size();
    if ((int)q_.size() >= max_len_) {
      *reason = DropReason::kQueueFull;
      return false;
    }
    if (avg_ >= red_.max_th) {
      *reason = DropReason::kRed;
      return false;
    }
    if (avg_ >= red_.min_th) {
      double pb = red_.max_p * (avg_ - red_.min_th) / (red_.max_th - red_.min_th);
      if (rng.bernoulli(pb)) {
        *reason = DropReason::kRed;
        return false;
      }
    }
  } else if ((int)q_.size() >= max_len_) {
    *reason = DropReason::kQueueFull;
    return false;
  }
  q_.push_back(std::move(p));
  return true;
}

Packet LinkQueue::pop() {
  Packet p = std::move(q_.front());
  q_.pop_front();
  return p;
}

const char* LogRecord::ev_name(Ev e) {
  switch (e) {
    case Ev::kSend: return "send";
    case Ev::kRecv: return "recv";
    case Ev::kForward: return "forward";
    case Ev::kDeliver: return "deliver";
    case Ev::kDrop: return "drop";
  }
  return "?";
}

std::string LogRecord::csv() const {
  std::string out = std::to_string(ts);
  out += ',';
  out += ev_name(ev);
  out += ',';
  out += csv_escape(link.str());
  out += ',';
  out += csv_escape(src.str());
  out += ',';
  out += csv_escape(dst.str());
  out += ',';
  out += std::to_string(size);
  out += ',';
  out += csv_escape(reason);
  return out;
}

// ---- SRouterCore ----

SRouterCore::SRouterCore(SRouterConfig cfg) : cfg_(std::move(cfg)) {
  agg_in_.burst_mb = kMtuBytes * kMbPerByte;
  agg_out_.burst_mb = kMtuBytes * kMbPerByte;
}

void SRouterCore::add_link(const Vid& neighbor, const LinkDirSpec& egress) {
  Link l;
  l.spec = egress;
  l.iqueue = LinkQueue(egress.queue_len, egress.policy, egress.red);
  l.equeue = LinkQueue(egress.queue_len, egress.policy, egress.red);
  l.shaper.burst_mb = kMtuBytes * kMbPerByte;
  l.loss_rng = Rng(fnv1a64(cfg_.self.str() + "|" + neighbor.str(), cfg_.seed ^ 0x9e3779b9));
  links_.emplace(neighbor, std::move(l));
}

std::vector<Vid> SRouterCore::link_neighbors() const {
  std::vector<Vid> out;
  for (const auto& [v, _] : links_) out.push_back(v);
  return out;
}

const LinkDirSpec* SRouterCore::link_spec(const Vid& neighbor) const {
  auto it = links_.find(neighbor);
  return it == links_.end() ? nullptr : &it->second.spec;
}

bool SRouterCore::register_handler(std::unique_ptr<IHandler> h, int position, std::string* err) {
  if (position < 0) position = (int)chain_.size();
  if (position > (int)chain_.size()) {
    if (err) *err = "handler position past end of chain (bypass stays last)";
    return false;
  }
  chain_.insert(chain_.begin() + position, std::move(h));
  return true;
}

std::vector<std::string> SRouterCore::chain_names() const {
  std::vector<std::string> out;
  for (const auto& h : chain_) out.emplace_back(h->name());
  out.emplace_back("bypass");
  return out;
}

void SRouterCore::log(usec_t ts, LogRecord::Ev ev, const Vid& link, const Vid& src,
                      const Vid& dst, size_t size, std::string reason) {
  if (!cfg_.log_events) return;
  logs_.push_back({ts, ev, link, src, dst, size, std::move(reason)});
}

void SRouterCore::drop(usec_t now, DropReason r, const Vid& link, const Packet& p) {
  drops_.by_reason[(int)r]++;
  if (auto it = links_.find(link); it != links_.end()) it->second.counters.dropped++;
  log(now, LogRecord::Ev::kDrop, link, p.src, p.dst, p.wire_size(), drop_reason_name(r));
}

void SRouterCore::on_malformed(const Vid& from, const std::string& why, usec_t now) {
  drops_.by_reason[(int)DropReason::kMalformed]++;
  log(now, LogRecord::Ev::kDrop, from, Vid(), Vid(), 0, "malformed: " + why);
}

void SRouterCore::on_ingress(const Vid& from, Packet p, usec_t now) {
  auto it = links_.find(from);
  if (it == links_.end()) {
    on_malformed(from, "unknown neighbor", now);
    return;
  }
  if (p.type == PacketType::kControl) {
    handle_control(from, p, now);
    return;
  }
  Link& l = it->second;
  l.counters.received++;
  l.counters.bytes_received += (int64_t)p.wire_size();
  log(now, LogRecord::Ev::kRecv, from, p.src, p.dst, p.wire_size());
  p.ingress_link = from;
  DropReason reason;
  if (!l.iqueue.enqueue(std::move(p), l.loss_rng, &reason)) {
    drop(now, reason, from, p);  // enqueue leaves p intact on failure
    return;
  }
  if (!frozen_) drain_iqueues(now);
}

void SRouterCore::drain_iqueues(usec_t now) {
  for (auto& [nbr, l] : links_) {
    while (!l.iqueue.empty()) {
      if (cfg_.agg_ingress_kbps > 0) {
        int64_t need = std::min(wire_mb(l.iqueue.front()), agg_in_.burst_mb);
        agg_in_.refill(now, cfg_.agg_ingress_kbps);
        if (agg_in_.tokens_mb < need) break;  // resumes at next_deadline
        agg_in_.tokens_mb -= wire_mb(l.iqueue.front());
        agg_in_.tokens_at = now;
      }
      process_one(nbr, l.iqueue.pop(), now);
    }
  }
}

void SRouterCore::process_one(const Vid& from, Packet p, usec_t now) {
  processed_++;
  for (auto& h : chain_) {
    HandlerResult res = h->process(p, *this);
    if (res.drop) {
      drops_.by_reason[(int)DropReason::kHandler]++;
      log(now, LogRecord::Ev::kDrop, from, p.src, p.dst, p.wire_size(),
          res.reason.empty() ? std::string("handler:") + std::string(h->name())
                             : res.reason);
      return;
    }
  }
  // bypass stage
  if (p.dst == cfg_.self) {
    if ((int)cqueue_.size() >= cfg_.cqueue_len) {
      drop(now, DropReason::kCqueueFull, from, p);
      return;
    }
    delivered_++;
    log(now, LogRecord::Ev::kDeliver, from, p.src, p.dst, p.wire_size());
    cqueue_.push_back(std::move(p));
    return;
  }
  log(now, LogRecord::Ev::kForward, from, p.src, p.dst, p.wire_size());
  route_out(std::move(p), now);
}

void SRouterCore::route_out(Packet p, usec_t now) {
  auto d = next_hop(table_, cfg_.self, p.dst);
  if (d.kind != HopDecision::Kind::kForward || !links_.count(d.hop)) {
    drop(now, DropReason::kNoRoute, d.kind == HopDecision::Kind::kForward ? d.hop : Vid(), p);
    return;
  }
  if (p.ttl == 0) {
    drop(now, DropReason::kTtl, d.hop, p);
    return;
  }
  p.ttl--;
  enqueue_egress(d.hop, std::move(p), now);
}

void SRouterCore::enqueue_egress(const Vid& hop, Packet p, usec_t now) {
  Link& l = links_.at(hop);
  DropReason reason;
  if (!l.equeue.enqueue(std::move(p), l.loss_rng, &reason)) {
    drop(now, reason, hop, p);
    return;
  }
  advance_link(hop, l, now);
}

bool SRouterCore::app_send(const Vid& dst, std::string payload, usec_t now, std::string* err) {
  if (payload.size() > Packet::kMaxPayload) {
    if (err) *err = "payload exceeds 64 KiB";
    return false;
  }
  Packet p;
  p.src = cfg_.self;
  p.dst = dst;
  p.ttl = cfg_.default_ttl;
  p.payload = std::move(payload);
  if (dst == cfg_.self) {
    if ((int)cqueue_.size() >= cfg_.cqueue_len) {
      drop(now, DropReason::kCqueueFull, Vid(), p);
      if (err) *err = "cqueue full";
      return false;
    }
    delivered_++;
    log(now, LogRecord::Ev::kDeliver, Vid(), p.src, p.dst, p.wire_size());
    cqueue_.push_back(std::move(p));
    return true;
  }
  auto d = next_hop(table_, cfg_.self, dst);
  if (d.kind != HopDecision::Kind::kForward || !links_.count(d.hop)) {
    if (err) *err = "no route to " + dst.str();
    return false;
  }
  if (p.ttl > 0) p.ttl--;
  enqueue_egress(d.hop, std::move(p), now);
  return true;
}

void SRouterCore::Shaper::refill(usec_t now, double kbps) {
  if (now <= tokens_at) return;
  double add = (double)(now - tokens_at) * kbps;  // millibits
  double t = (double)tokens_mb + add;
  tokens_mb = t >= (double)burst_mb ? burst_mb : (int64_t)t;
  tokens_at = now;
}

void SRouterCore::advance_link(const Vid& nbr, Link& l, usec_t now) {
  if (frozen_ || l.paused_tx) return;
  // equeue -> (loss) -> token gate (+ aggregate) -> serialization -> delay line
  while (!l.equeue.empty()) {
    int64_t size_mb = wire_mb(l.equeue.front());
    if (!l.spec.unlimited()) {
      l.shaper.refill(now, l.spec.bandwidth_kbps);
      if (l.shaper.tokens_mb < std::min(size_mb, l.shaper.burst_mb)) break;
    }
    if (cfg_.agg_egress_kbps > 0) {
      agg_out_.refill(now, cfg_.agg_egress_kbps);
      if (agg_out_.tokens_mb < std::min(size_mb, agg_out_.burst_mb)) break;
    }
    Packet p = l.equeue.pop();
    if (l.spec.loss_rate > 0 && l.loss_rng.bernoulli(l.spec.loss_rate)) {
      drop(now, DropReason::kLoss, nbr, p);  // lost before consuming bandwidth
      continue;
    }
    usec_t fin = now;
    if (!l.spec.unlimited()) {
      l.shaper.tokens_mb -= size_mb;
      l.shaper.tokens_at = now;
      usec_t start = std::max(now, l.shaper.wire_free);
      fin = start + ceil_div_rate(size_mb, l.spec.bandwidth_kbps);
      l.shaper.wire_free = fin;
    }
    if (cfg_.agg_egress_kbps > 0) {
      agg_out_.tokens_mb -= size_mb;
      agg_out_.tokens_at = now;
    }
    l.delay_line.push_back({fin + l.spec.delay_us, std::move(p)});
  }
  while (!l.delay_line.empty() && l.delay_line.front().release <= now) {
    stage_tx(nbr, std::move(l.delay_line.front().pkt), now, true);
    l.delay_line.pop_front();
  }
}

void SRouterCore::stage_tx(const Vid& nbr, Packet pkt, usec_t now, bool count) {
  if (count) {
    Link& l = links_.at(nbr);
    l.counters.sent++;
    l.counters.bytes_sent += (int64_t)pkt.wire_size();
    log(now, LogRecord::Ev::kSend, nbr, pkt.src, pkt.dst, pkt.wire_size());
  }
  pending_tx_.push_back({nbr, std::move(pkt)});
}

void SRouterCore::advance(usec_t now) {
  if (frozen_) return;
  drain_iqueues(now);
  for (auto& [nbr, l] : links_) advance_link(nbr, l, now);
}

std::optional<usec_t> SRouterCore::next_deadline() const {
  if (frozen_) return std::nullopt;
  std::optional<usec_t> best;
  auto consider = [&](usec_t t) {
    if (!best || t < *best) best = t;
  };
  for (const auto& [nbr, l] : links_) {
    if (l.paused_tx) continue;
    if (!l.delay_line.empty()) consider(l.delay_line.front().release);
    if (!l.equeue.empty()) {
      int64_t size_mb = (int64_t)l.equeue.front().wire_size() * kMbPerByte;
      if (!l.spec.unlimited()) {
        int64_t need = std::min(size_mb, l.shaper.burst_mb);
        int64_t deficit = need - l.shaper.tokens_mb;
        consider(deficit <= 0 ? l.shaper.tokens_at
                              : l.shaper.tokens_at +
                                    ceil_div_rate(deficit, l.spec.bandwidth_kbps));
      }
      if (cfg_.agg_egress_kbps > 0) {
        int64_t need = std::min(size_mb, agg_out_.burst_mb);
        int64_t deficit = need - agg_out_.tokens_mb;
        consider(deficit <= 0 ? agg_out_.tokens_at
                              : agg_out_.tokens_at + ceil_div_rate(deficit, cfg_.agg_egress_kbps));
      }
    }
    if (cfg_.agg_ingress_kbps > 0 && !l.iqueue.empty()) {
      int64_t need = std::min((int64_t)l.iqueue.front().wire_size() * kMbPerByte, agg_in_.burst_mb);
      int64_t deficit = need - agg_in_.tokens_mb;
      consider(deficit <= 0 ? agg_in_.tokens_at
                            : agg_in_.tokens_at + ceil_div_rate(deficit, cfg_.agg_ingress_kbps));
    }
  }
  return best;
}

void SRouterCore::handle_control(const Vid& from, Packet& p, usec_t now) {
  if (p.payload.empty()) return;
  Link& l = links_.at(from);
  switch ((ControlType)p.payload[0]) {
    case ControlType::kPause:
      if (!l.paused_tx) {
        l.paused_tx = true;
        l.paused_since = now;
      }
      stage_tx(from, make_control(cfg_.self, from, ControlType::kPauseAck), now, false);
      break;
    case ControlType::kResume:
      if (l.paused_tx) {
        usec_t delta = now - l.paused_since;
        for (auto& d : l.delay_line) d.release += delta;
        l.shaper.wire_free += delta;
        l.shaper.tokens_at += delta;
        l.paused_tx = false;
      }
      break;
    case ControlType::kPauseAck:
      l.pause_acked = true;
      break;
    case ControlType::kVidMapUpdate:
      // Endpoint remapping is the runtime's concern; nothing to do here.
      break;
  }
}

void SRouterCore::pause_begin(usec_t now) {
  frozen_ = true;
  for (auto& [nbr, l] : links_) {
    l.pause_acked = false;
    stage_tx(nbr, make_control(cfg_.self, nbr, ControlType::kPause), now, false);
  }
}

bool SRouterCore::pause_complete() const {
  for (const auto& [nbr, l] : links_)
    if (!l.pause_acked) return false;
  return true;
}

void SRouterCore::emit_resume(usec_t now) {
  for (auto& [nbr, l] : links_)
    stage_tx(nbr, make_control(cfg_.self, nbr, ControlType::kResume), now, false);
  frozen_ = false;
  drain_iqueues(now);
  for (auto& [nbr, l] : links_) advance_link(nbr, l, now);
}

// ---- migration state blob ----

static void put_queue(Writer& w, const std::deque<Packet>& q) {
  w.u32((uint32_t)q.size());
  for (const auto& p : q) w.bytes32(p.encode());
}

static bool get_queue(Reader& r, std::deque<Packet>* q, std::string* err) {
  uint32_t n;
  if (!r.u32(&n)) return false;
  for (uint32_t i = 0; i < n; i++) {
    std::string raw;
    if (!r.bytes32(&raw)) return false;
    Packet p;
    auto consumed = Packet::decode(raw, &p, err);
    if (!consumed || *consumed != raw.size()) return false;
    q->push_back(std::move(p));
  }
  return true;
}

std::string SRouterCore::serialize_state(usec_t now) const {
  Writer w;
  w.u32(0x4C4C5354);  // "LLST"
  w.u8(1);
  w.u32((uint32_t)named_.size());
  for (const auto& [k, v] : named_) {
    w.str8(k);
    w.i64(v);
  }
  w.i64(processed_);
  w.i64(delivered_);
  w.i64(migration_loss_);
  for (auto v : drops_.by_reason) w.i64(v);
  put_queue(w, cqueue_);
  w.u32((uint32_t)links_.size());
  for (const auto& [nbr, l] : links_) {
    w.vid(nbr);
    w.i64(l.counters.sent);
    w.i64(l.counters.received);
    w.i64(l.counters.dropped);
    w.i64(l.counters.bytes_sent);
    w.i64(l.counters.bytes_received);
    w.f64(l.iqueue.red_avg());
    w.f64(l.equeue.red_avg());
    put_queue(w, const_cast<LinkQueue&>(l.iqueue).raw());
    put_queue(w, const_cast<LinkQueue&>(l.equeue).raw());
    w.u32((uint32_t)l.delay_line.size());
    for (const auto& d : l.delay_line) {
      w.i64(std::max<int64_t>(0, d.release - now));
      w.bytes32(d.pkt.encode());
    }
    w.i64(std::max<int64_t>(0, l.shaper.wire_free - now));
    w.i64(l.shaper.tokens_mb);
    w.str8(l.loss_rng.save_state());
  }
  return w.take();
}

bool SRouterCore::restore_state(std::string_view blob, usec_t now, std::string* err) {
  Reader r(blob);
  uint32_t magic;
  uint8_t ver;
  if (!r.u32(&magic) || magic != 0x4C4C5354 || !r.u8(&ver) || ver != 1) {
    if (err) *err = "bad state blob";
    return false;
  }
  uint32_t nnamed;
  if (!r.u32(&nnamed)) return false;
  named_.clear();
  for (uint32_t i = 0; i < nnamed; i++) {
    std::string k;
    int64_t v;
    if (!r.str8(&k) || !r.i64(&v)) return false;
    named_[k] = v;
  }
  if (!r.i64(&processed_) || !r.i64(&delivered_) || !r.i64(&migration_loss_)) return false;
  for (auto& v : drops_.by_reason)
    if (!r.i64(&v)) return false;
  cqueue_.clear();
  if (!get_queue(r, &cqueue_, err)) return false;
  uint32_t nlinks;
  if (!r.u32(&nlinks)) return false;
  for (uint32_t i = 0; i < nlinks; i++) {
    Vid nbr;
    if (!r.vid(&nbr)) return false;
    auto it = links_.find(nbr);
    if (it == links_.end()) {
      if (err) *err = "state blob names unknown link " + nbr.str();
      return false;
    }
    Link& l = it->second;
    if (!r.i64(&l.counters.sent) || !r.i64(&l.counters.received) || !r.i64(&l.counters.dropped) ||
        !r.i64(&l.counters.bytes_sent) || !r.i64(&l.counters.bytes_received))
      return false;
    double ia, ea;
    if (!r.f64(&ia) || !r.f64(&ea)) return false;
    l.iqueue.set_red_avg(ia);
    l.equeue.set_red_avg(ea);
    l.iqueue.raw().clear();
    l.equeue.raw().clear();
    if (!get_queue(r, &l.iqueue.raw(), err) || !get_queue(r, &l.equeue.raw(), err)) return false;
    for (auto& qp : l.iqueue.raw()) qp.ingress_link = nbr;  // not on the wire
    uint32_t nd;
    if (!r.u32(&nd)) return false;
    l.delay_line.clear();
    for (uint32_t j = 0; j < nd; j++) {
      int64_t remaining;
      std::string raw;
      if (!r.i64(&remaining) || !r.bytes32(&raw)) return false;
      Packet p;
      auto consumed = Packet::decode(raw, &p, err);
      if (!consumed || *consumed != raw.size()) return false;
      l.delay_line.push_back({now + remaining, std::move(p)});
    }
    int64_t wire_rem;
    if (!r.i64(&wire_rem) || !r.i64(&l.shaper.tokens_mb)) return false;
    l.shaper.wire_free = now + wire_rem;
    l.shaper.tokens_at = now;
    std::string rngstate;
    if (!r.str8(&rngstate) || !l.loss_rng.load_state(rngstate)) return false;
  }
  frozen_ = true;  // stays frozen until emit_resume
  return true;
}

// ---- introspection ----

RouterSnapshot SRouterCore::introspect() const {
  RouterSnapshot s;
  s.vid = cfg_.self;
  s.table = table_;
  for (const auto& [nbr, l] : links_) s.links[nbr] = l.counters;
  s.drops = drops_;
  s.named = named_;
  s.chain = chain_names();
  s.cqueue_depth = cqueue_.size();
  s.processed = processed_;
  s.delivered = delivered_;
  s.migration_loss = migration_loss_;
  return s;
}

int64_t SRouterCore::counter(const std::string& name) const {
  auto it = named_.find(name);
  return it == named_.end() ? 0 : it->second;
}

const LinkCounters* SRouterCore::link_counters(const Vid& neighbor) const {
  auto it = links_.find(neighbor);
  return it == links_.end() ? nullptr : &it->second.counters;
}

}  // namespace litelab
