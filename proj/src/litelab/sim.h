#pragma once

#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <vector>

#include "litelab/apps.h"
#include "litelab/routing.h"
#include "litelab/srouter.h"
#include "litelab/topology.h"

namespace litelab {

// Deterministic discrete-event scheduler. Events at equal timestamps run in
// insertion order, so a fixed seed gives a byte-identical trace.
class SimScheduler {
 public:
  void at(usec_t t, std::function<void()> fn);
  bool step();  // runs the earliest event; false when empty
  bool run_until(usec_t t_end);
  void run_all(usec_t hard_stop);
  usec_t now() const { return now_; }
  bool empty() const { return q_.empty(); }

 private:
  struct Ev {
    usec_t t;
    uint64_t seq;
    std::function<void()> fn;
    bool operator>(const Ev& o) const { return t != o.t ? t > o.t : seq > o.seq; }
  };
  std::priority_queue<Ev, std::vector<Ev>, std::greater<>> q_;
  uint64_t seq_ = 0;
  usec_t now_ = 0;
};

// Single-process virtual-time network: every router is an SRouterCore, wire
// transit is immediate, apps are inline callbacks. Used by tests, the
// deterministic benches, and anywhere accuracy must not depend on the host.
class SimNet {
 public:
  struct Options {
    uint64_t seed = 1;
    uint8_t default_ttl = 64;
    int cqueue_len = 1000;
    bool log_events = false;  // keep per-event records for the trace
  };

  SimNet(const Topology& t, const RouteSet& routes, Options opt);

  SRouterCore& core(const Vid& v) { return *routers_.at(v).core; }
  SimScheduler& sched() { return sched_; }
  usec_t now() const { return sched_.now(); }

  void attach_app(const Vid& v, std::unique_ptr<App> app);
  bool add_handler(const Vid& v, std::unique_ptr<IHandler> h, int position, std::string* err);

  // Drives the clock. run_until processes events up to and including t.
  void run_until(usec_t t);
  // Runs until no events remain or the hard stop is reached.
  void run_all(usec_t hard_stop = 3600LL * 1000000);
  bool apps_done() const { return apps_running_ == 0; }

  // Migrates a router between two cores inside the simulation, exercising the
  // same pause/serialize/restore/resume sequence the agents run.
  bool migrate_noop(const Vid& v, std::string* err);

  // Merged per-event trace, stable ordering. Empty unless log_events.
  const std::vector<std::string>& trace() const { return trace_; }
  std::string trace_text() const;

 private:
  struct SimApi;
  struct Router {
    std::unique_ptr<SRouterCore> core;
    std::unique_ptr<App> app;
    std::unique_ptr<SimApi> api;
    bool app_finished = false;
  };

  void pump(const Vid& v);  // drain tx/cqueue/logs after core activity
  void arm_wake(const Vid& v);

  Options opt_;
  SimScheduler sched_;
  std::map<Vid, Router> routers_;
  std::map<Vid, usec_t> armed_wake_;
  std::vector<std::string> trace_;
  int apps_running_ = 0;
};

}  // namespace litelab
