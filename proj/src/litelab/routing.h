#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "litelab/topology.h"
#include "litelab/vid.h"

namespace litelab {

enum class RouteMode : uint8_t { kOtf = 0, kSym = 1, kStc = 2 };

const char* route_mode_name(RouteMode m);
std::optional<RouteMode> route_mode_from(std::string_view name);

struct RoutingTable {
  Vid owner;
  RouteMode mode = RouteMode::kOtf;
  std::map<Vid, Vid> next;  // destination -> next hop (a direct neighbor)
  bool operator==(const RoutingTable&) const = default;
};

struct RouteSet {
  RouteMode mode = RouteMode::kOtf;
  uint64_t topo_hash = 0;
  std::map<Vid, RoutingTable> tables;
  bool operator==(const RouteSet&) const = default;
};

struct RouteError {
  std::string message;
};

// Per-source shortest paths (Dijkstra) over link weights. Ties broken by the
// byte-wise lowest first hop, independent of traversal order. Routes are not
// required to be symmetric. Fails on a disconnected topology.
std::optional<RouteSet> build_otf(const Topology& t, RouteError* err);

// All-pairs shortest paths (Floyd-Warshall) with a symmetric via-matrix
// tie-break, so path(a,b) is always the exact reverse of path(b,a).
std::optional<RouteSet> build_sym(const Topology& t, RouteError* err);

struct StcIssue {
  bool fatal = false;
  int line = 0;
  std::string message;
};

// Static routing file:
//   table <owner-vid>
//   route <dst-vid> via <nexthop-vid>
// '#' comments. Unknown vids and non-neighbor next hops are errors; a
// forwarding loop is an error naming the cycle; missing (owner, dst) entries
// on a connected topology are warnings.
std::optional<RouteSet> load_stc(const Topology& t, std::string_view text,
                                 std::vector<StcIssue>* issues);

struct HopDecision {
  enum class Kind { kDeliver, kForward, kNoRoute } kind = Kind::kNoRoute;
  Vid hop;  // set when kind == kForward
};

HopDecision next_hop(const RouteSet& rs, const Vid& at, const Vid& dst);
HopDecision next_hop(const RoutingTable& table, const Vid& at, const Vid& dst);

// Full path a -> b by following next hops; empty when unroutable.
std::vector<Vid> route_path(const RouteSet& rs, const Vid& from, const Vid& to);

// Canonical STC-grammar text (owners and destinations sorted); byte-identical
// for identical inputs, and load_stc(t, serialize_routeset(rs)) reproduces rs.
std::string serialize_routeset(const RouteSet& rs);

}  // namespace litelab
