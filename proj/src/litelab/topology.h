#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "litelab/vid.h"

namespace litelab {

enum class QueuePolicy : uint8_t { kDroptail = 0, kRed = 1 };

struct RedParams {
  double min_th = 0;
  double max_th = 0;
  double max_p = 0;
  double w_q = 0.002;
  bool operator==(const RedParams&) const = default;
};

// Bandwidth of 0 means unlimited.
constexpr double kUnlimitedBandwidth = 0;

struct LinkSpec {
  Vid a;
  Vid b;
  double delay_ms = 0;
  double loss_rate = 0;
  double bandwidth_kbps = kUnlimitedBandwidth;
  int queue_len = 1000;
  QueuePolicy policy = QueuePolicy::kDroptail;
  RedParams red;
  double weight = 1.0;  // route metric, hop count by default

  bool unlimited() const { return bandwidth_kbps == kUnlimitedBandwidth; }
  bool operator==(const LinkSpec&) const = default;
};

struct RouterDef {
  Vid vid;
  std::string app;  // optional user application name, empty when none
  std::vector<std::string> handlers;
  bool operator==(const RouterDef&) const = default;
};

struct Topology {
  std::vector<RouterDef> routers;  // declaration order
  std::vector<LinkSpec> links;     // declaration order, one per unordered pair
  bool connectivity_required = true;

  bool operator==(const Topology&) const = default;

  bool has_router(const Vid& v) const;
  const RouterDef* router(const Vid& v) const;
  std::vector<Vid> neighbors(const Vid& v) const;                 // sorted
  const LinkSpec* link_between(const Vid& a, const Vid& b) const;  // either orientation
  uint64_t hash() const;  // stable content hash (serialized form)
};

struct ParseIssue {
  int line = 0;  // 1-based, 0 when not line-specific
  std::string message;
};

// Line-oriented topology grammar ('#' comments):
//   router <vid> [app=<name>] [handlers=<n1>,<n2>...]
//   link <vid> <vid> [delay=<ms>] [loss=<p>] [bw=<kbps>|unlimited] [qlen=<n>]
//        [qpolicy=droptail|red:<min>:<max>:<maxp>:<wq>] [weight=<w>]
//   option connectivity=required|optional
// Declaring the same unordered pair twice expresses per-direction overrides.
std::optional<Topology> parse_topology(std::string_view text, std::vector<ParseIssue>* issues);

// Canonical text form; parse_topology(serialize_topology(t)) == t.
std::string serialize_topology(const Topology& t);

struct Violation {
  std::string where;
  std::string message;
};

// Structural validation: type invariants plus (unless waived) connectivity.
std::vector<Violation> validate(const Topology& t);

// G(n,p) with VIDs "0".."n-1"; deterministic for a fixed seed.
Topology generate_random(int n, double p, uint64_t seed);

// Barabasi-Albert preferential attachment. Seed graph: complete graph on the
// first m_attach nodes; every later node attaches m_attach distinct edges.
Topology generate_scale_free(int n, int m_attach, uint64_t seed);

// Edge-list import, one "vid vid [weight]" per line ('#' comments). Used for
// ISP maps exported from router-level datasets.
std::optional<Topology> parse_edge_list(std::string_view text, std::vector<ParseIssue>* issues);

}  // namespace litelab
