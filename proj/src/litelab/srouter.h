#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "litelab/routing.h"
#include "litelab/topology.h"
#include "litelab/util.h"
#include "litelab/vid.h"
#include "litelab/wire.h"

namespace litelab {

// One direction of a link as seen from the sending router.
struct LinkDirSpec {
  usec_t delay_us = 0;
  double loss_rate = 0;
  double bandwidth_kbps = kUnlimitedBandwidth;
  int queue_len = 1000;
  QueuePolicy policy = QueuePolicy::kDroptail;
  RedParams red;

  static LinkDirSpec from(const LinkSpec& l);
  bool unlimited() const { return bandwidth_kbps == kUnlimitedBandwidth; }
};

// Egress spec for `from -> to`, honoring a per-direction override declaration
// when the topology carries both orientations.
LinkDirSpec link_dir_spec(const Topology& t, const Vid& from, const Vid& to);

enum class DropReason : uint8_t {
  kQueueFull,
  kRed,
  kLoss,
  kTtl,
  kNoRoute,
  kHandler,
  kMalformed,
  kCqueueFull,
};
const char* drop_reason_name(DropReason r);

// Bounded FIFO applying the configured queueing policy on enqueue.
class LinkQueue {
 public:
  LinkQueue() = default;
  LinkQueue(int max_len, QueuePolicy policy, RedParams red);

  // False when the policy dropped the packet; *reason then says why and the
  // packet is left untouched (only a successful enqueue moves from it).
  bool enqueue(Packet&& p, Rng& rng, DropReason* reason);
  bool empty() const { return q_.empty(); }
  size_t size() const { return q_.size(); }
  Packet pop();
  const Packet& front() const { return q_.front(); }

  double red_avg() const { return avg_; }
  void set_red_avg(double a) { avg_ = a; }
  std::deque<Packet>& raw() { return q_; }

 private:
  std::deque<Packet> q_;
  int max_len_ = 1000;
  QueuePolicy policy_ = QueuePolicy::kDroptail;
  RedParams red_;
  double avg_ = 0;  // EWMA of occupancy, updated on enqueue
};

struct LinkCounters {
  int64_t sent = 0;
  int64_t received = 0;
  int64_t dropped = 0;
  int64_t bytes_sent = 0;
  int64_t bytes_received = 0;
};

struct DropStats {
  int64_t by_reason[8] = {0};
  int64_t total() const;
};

struct LogRecord {
  usec_t ts = 0;
  enum class Ev : uint8_t { kSend, kRecv, kForward, kDeliver, kDrop } ev = Ev::kSend;
  Vid link;
  Vid src;
  Vid dst;
  size_t size = 0;
  std::string reason;

  std::string csv() const;  // timestamp_us,event,link,src,dst,size,reason
  static const char* ev_name(Ev e);
};

class SRouterCore;

struct HandlerResult {
  bool drop = false;
  std::string reason;
};

// One stage in the per-packet processing chain. May rewrite the packet or
// drop it; a drop stops the chain. The terminal bypass stage (routing to
// cqueue/equeue) is built into the router and always runs last.
class IHandler {
 public:
  virtual ~IHandler() = default;
  virtual std::string_view name() const = 0;
  virtual HandlerResult process(Packet& p, SRouterCore& r) = 0;
};

struct SRouterConfig {
  Vid self;
  uint8_t default_ttl = 64;
  int cqueue_len = 1000;
  uint64_t seed = 0;
  bool log_events = false;
  double agg_ingress_kbps = 0;  // 0 = no aggregate ingress cap
  double agg_egress_kbps = 0;   // 0 = no aggregate egress cap
};

struct RouterSnapshot {
  Vid vid;
  RoutingTable table;
  std::map<Vid, LinkCounters> links;
  DropStats drops;
  std::map<std::string, int64_t> named;  // handler counters etc.
  std::vector<std::string> chain;        // handler names, "bypass" last
  size_t cqueue_depth = 0;
  int64_t processed = 0;
  int64_t delivered = 0;
  int64_t migration_loss = 0;
};

// The router state machine. Owns queues, shaping, delay, loss, the handler
// chain and counters. It never touches clocks or I/O: callers feed events
// with explicit timestamps and drain pending_tx()/cqueue()/pending_logs(),
// which is what lets the virtual-time and real-time backends share it.
class SRouterCore {
 public:
  explicit SRouterCore(SRouterConfig cfg);

  const Vid& self() const { return cfg_.self; }
  const SRouterConfig& config() const { return cfg_; }

  void add_link(const Vid& neighbor, const LinkDirSpec& egress);
  bool has_link(const Vid& neighbor) const { return links_.count(neighbor) > 0; }
  std::vector<Vid> link_neighbors() const;
  const LinkDirSpec* link_spec(const Vid& neighbor) const;

  void set_table(RoutingTable table) { table_ = std::move(table); }
  const RoutingTable& table() const { return table_; }

  // Inserts before the bypass stage. position -1 appends; position beyond the
  // current user chain is an error ("cannot displace the bypass handler").
  bool register_handler(std::unique_ptr<IHandler> h, int position, std::string* err);
  std::vector<std::string> chain_names() const;
  std::vector<std::unique_ptr<IHandler>> release_chain() { return std::move(chain_); }
  void adopt_chain(std::vector<std::unique_ptr<IHandler>> c) { chain_ = std::move(c); }

  // --- events ---
  void on_ingress(const Vid& from, Packet p, usec_t now);
  void on_malformed(const Vid& from, const std::string& why, usec_t now);
  bool app_send(const Vid& dst, std::string payload, usec_t now, std::string* err);
  // Runs shaper/delay stages up to `now`, staging due wire writes.
  void advance(usec_t now);
  std::optional<usec_t> next_deadline() const;

  // --- outputs ---
  struct Tx {
    Vid neighbor;
    Packet pkt;
  };
  std::vector<Tx>& pending_tx() { return pending_tx_; }
  std::deque<Packet>& cqueue() { return cqueue_; }
  std::vector<LogRecord>& pending_logs() { return logs_; }

  // --- migration ---
  void pause_begin(usec_t now);          // emits PAUSE to neighbors, freezes processing
  bool pause_complete() const;           // every neighbor acked
  bool frozen() const { return frozen_; }
  std::string serialize_state(usec_t now) const;
  bool restore_state(std::string_view blob, usec_t now, std::string* err);
  void emit_resume(usec_t now);          // emits RESUME to neighbors, unfreezes

  // --- introspection / counters ---
  RouterSnapshot introspect() const;
  void bump_counter(const std::string& name, int64_t d) { named_[name] += d; }
  int64_t counter(const std::string& name) const;
  const LinkCounters* link_counters(const Vid& neighbor) const;
  const DropStats& drops() const { return drops_; }
  int64_t processed() const { return processed_; }
  int64_t delivered() const { return delivered_; }

 private:
  struct Shaper {
    int64_t tokens_mb = 0;    // millibits; 1 kbps == 1 millibit/us
    usec_t tokens_at = 0;
    int64_t burst_mb = 0;
    usec_t wire_free = 0;
    void refill(usec_t now, double kbps);
  };
  struct DelayedPkt {
    usec_t release = 0;
    Packet pkt;
  };
  struct Link {
    LinkDirSpec spec;
    LinkQueue iqueue;
    LinkQueue equeue;
    Shaper shaper;
    std::deque<DelayedPkt> delay_line;
    LinkCounters counters;
    Rng loss_rng{0};
    bool paused_tx = false;  // neighbor asked us to stop (its migration)
    usec_t paused_since = 0;
    bool pause_acked = false;  // neighbor acked our own pause
  };

  void drain_iqueues(usec_t now);
  void process_one(const Vid& from, Packet p, usec_t now);
  void route_out(Packet p, usec_t now);
  void enqueue_egress(const Vid& hop, Packet p, usec_t now);
  void advance_link(const Vid& nbr, Link& l, usec_t now);
  void handle_control(const Vid& from, Packet& p, usec_t now);
  void stage_tx(const Vid& nbr, Packet pkt, usec_t now, bool count);
  void log(usec_t ts, LogRecord::Ev ev, const Vid& link, const Vid& src, const Vid& dst,
           size_t size, std::string reason = {});
  void drop(usec_t now, DropReason r, const Vid& link, const Packet& p);

  SRouterConfig cfg_;
  std::map<Vid, Link> links_;
  RoutingTable table_;
  std::vector<std::unique_ptr<IHandler>> chain_;
  std::deque<Packet> cqueue_;
  std::vector<Tx> pending_tx_;
  std::vector<LogRecord> logs_;
  std::map<std::string, int64_t> named_;
  DropStats drops_;
  int64_t processed_ = 0;
  int64_t delivered_ = 0;
  int64_t migration_loss_ = 0;
  bool frozen_ = false;
  Shaper agg_in_, agg_out_;  // aggregate caps, active when configured
};

}  // namespace litelab
