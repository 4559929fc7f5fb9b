#include "litelab/routing.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

#include "litelab/util.h"

namespace litelab {

const char* route_mode_name(RouteMode m) {
  switch (m) {
    case RouteMode::kOtf: return "otf";
    case RouteMode::kSym: return "sym";
    case RouteMode::kStc: return "stc";
  }
  return "?";
}

std::optional<RouteMode> route_mode_from(std::string_view name) {
  if (name == "otf" || name == "OTF") return RouteMode::kOtf;
  if (name == "sym" || name == "SYM") return RouteMode::kSym;
  if (name == "stc" || name == "STC") return RouteMode::kStc;
  return std::nullopt;
}

namespace {

struct Graph {
  std::vector<Vid> vids;  // sorted
  std::map<Vid, int> idx;
  std::vector<std::vector<std::pair<int, double>>> adj;  // (neighbor, weight)

  explicit Graph(const Topology& t) {
    for (const auto& r : t.routers) vids.push_back(r.vid);
    std::sort(vids.begin(), vids.end());
    for (size_t i = 0; i < vids.size(); i++) idx[vids[i]] = (int)i;
    adj.resize(vids.size());
    for (const auto& l : t.links) {
      int a = idx.at(l.a), b = idx.at(l.b);
      adj[a].push_back({b, l.weight});
      adj[b].push_back({a, l.weight});
    }
    // Neighbor order fixed by vid order for deterministic iteration.
    for (auto& v : adj)
      std::sort(v.begin(), v.end(), [&](auto& x, auto& y) { return vids[x.first] < vids[y.first]; });
  }
};

}  // namespace

std::optional<RouteSet> build_otf(const Topology& t, RouteError* err) {
  Graph g(t);
  int n = (int)g.vids.size();
  RouteSet rs;
  rs.mode = RouteMode::kOtf;
  rs.topo_hash = t.hash();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  for (int s = 0; s < n; s++) {
    std::vector<double> dist(n, kInf);
    std::vector<int> first_hop(n, -1);
    dist[s] = 0;
    // (dist, vid index) min-heap; index tie-break keeps settle order stable.
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.push({0, s});
    std::vector<char> done(n, 0);
    std::vector<int> order;
    while (!pq.empty()) {
      auto [d, v] = pq.top();
      pq.pop();
      if (done[v]) continue;
      done[v] = 1;
      order.push_back(v);
      for (auto [u, w] : g.adj[v])
        if (dist[v] + w < dist[u]) {
          dist[u] = dist[v] + w;
          pq.push({dist[u], u});
        }
    }
    // First hops chosen as the minimum over all shortest predecessors, which
    // makes the tie-break independent of heap pop order.
    for (int v : order) {
      if (v == s) continue;
      int best = -1;
      for (auto [u, w] : g.adj[v]) {
        if (dist[u] + w != dist[v]) continue;
        int cand = (u == s) ? v : first_hop[u];
        if (cand < 0) continue;
        if (best < 0 || g.vids[cand] < g.vids[best]) best = cand;
      }
      first_hop[v] = best;
    }
    RoutingTable table;
    table.owner = g.vids[s];
    table.mode = RouteMode::kOtf;
    for (int v = 0; v < n; v++) {
      if (v == s) continue;
      if (first_hop[v] < 0) {
        if (err) err->message = "topology is disconnected: no route " +
                                g.vids[s].str() + " -> " + g.vids[v].str();
        return std::nullopt;
      }
      table.next[g.vids[v]] = g.vids[first_hop[v]];
    }
    rs.tables[table.owner] = std::move(table);
  }
  return rs;
}

std::optional<RouteSet> build_sym(const Topology& t, RouteError* err) {
  Graph g(t);
  int n = (int)g.vids.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, kInf));
  // via[i][j] = intermediate node splitting the chosen i-j path, -1 = direct.
  // Strict-improvement updates with k ascending keep via symmetric, which is
  // what makes route(a,b) the exact reverse of route(b,a).
  std::vector<std::vector<int>> via(n, std::vector<int>(n, -1));
  for (int i = 0; i < n; i++) dist[i][i] = 0;
  for (int i = 0; i < n; i++)
    for (auto [j, w] : g.adj[i])
      if (w < dist[i][j]) dist[i][j] = dist[j][i] = w;
  for (int k = 0; k < n; k++)
    for (int i = 0; i < n; i++) {
      if (dist[i][k] == kInf) continue;
      for (int j = 0; j < n; j++)
        if (dist[i][k] + dist[k][j] < dist[i][j]) {
          dist[i][j] = dist[i][k] + dist[k][j];
          via[i][j] = k;
        }
    }

  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++)
      if (i != j && dist[i][j] == kInf) {
        if (err) err->message = "topology is disconnected: no route " +
                                g.vids[i].str() + " -> " + g.vids[j].str();
        return std::nullopt;
      }

  // Expand the first hop of each pair from the via matrix.
  std::vector<std::vector<int>> fh(n, std::vector<int>(n, -1));
  // fh[i][j]: recursive on via; memoized iteratively via explicit stack.
  std::function<int(int, int)> first = [&](int i, int j) -> int {
    if (fh[i][j] >= 0) return fh[i][j];
    int k = via[i][j];
    int r = (k < 0) ? j : first(i, k);
    fh[i][j] = r;
    return r;
  };
  RouteSet rs;
  rs.mode = RouteMode::kSym;
  rs.topo_hash = t.hash();
  for (int i = 0; i < n; i++) {
    RoutingTable table;
    table.owner = g.vids[i];
    table.mode = RouteMode::kSym;
    for (int j = 0; j < n; j++)
      if (i != j) table.next[g.vids[j]] = g.vids[first(i, j)];
    rs.tables[table.owner] = std::move(table);
  }
  return rs;
}

std::optional<RouteSet> load_stc(const Topology& t, std::string_view text,
                                 std::vector<StcIssue>* issues) {
  std::vector<StcIssue> local;
  auto& out = issues ? *issues : local;
  RouteSet rs;
  rs.mode = RouteMode::kStc;
  rs.topo_hash = t.hash();
  std::set<Vid> routers;
  for (const auto& r : t.routers) routers.insert(r.vid);
  std::map<Vid, std::set<Vid>> nbrs;
  for (const auto& l : t.links) {
    nbrs[l.a].insert(l.b);
    nbrs[l.b].insert(l.a);
  }

  RoutingTable* cur = nullptr;
  int lineno = 0;
  bool fatal = false;
  for (auto raw : split_on(text, '\n')) {
    lineno++;
    std::string_view line = trim(raw);
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    auto tok = split_ws(line);
    if (tok[0] == "table" && tok.size() == 2) {
      Vid owner(tok[1]);
      if (!routers.count(owner)) {
        out.push_back({true, lineno, "unknown vid '" + tok[1] + "'"});
        fatal = true;
        continue;
      }
      auto [it, inserted] = rs.tables.try_emplace(owner);
      if (inserted) {
        it->second.owner = owner;
        it->second.mode = RouteMode::kStc;
      }
      cur = &it->second;
    } else if (tok[0] == "route" && tok.size() == 4 && tok[2] == "via") {
      if (!cur) {
        out.push_back({true, lineno, "route before any table header"});
        fatal = true;
        continue;
      }
      Vid dst(tok[1]), hop(tok[3]);
      if (!routers.count(dst)) {
        out.push_back({true, lineno, "unknown vid '" + tok[1] + "'"});
        fatal = true;
        continue;
      }
      if (!routers.count(hop)) {
        out.push_back({true, lineno, "unknown vid '" + tok[3] + "'"});
        fatal = true;
        continue;
      }
      if (dst == cur->owner) {
        out.push_back({true, lineno, "route to self at '" + cur->owner.str() + "'"});
        fatal = true;
        continue;
      }
      if (!nbrs[cur->owner].count(hop)) {
        out.push_back({true, lineno, "next hop '" + tok[3] + "' is not a neighbor of '" +
                                         cur->owner.str() + "'"});
        fatal = true;
        continue;
      }
      cur->next[dst] = hop;
    } else {
      out.push_back({true, lineno, "unparseable line"});
      fatal = true;
    }
  }

  // Tables must exist for every router (possibly empty via a bare header).
  for (const auto& v : routers) {
    auto [it, inserted] = rs.tables.try_emplace(v);
    if (inserted) {
      it->second.owner = v;
      it->second.mode = RouteMode::kStc;
      out.push_back({false, 0, "no table for router '" + v.str() + "'"});
    }
  }

  // Loop check: for each destination the next-hop map is a functional graph;
  // walk it from every router with a three-color mark.
  std::set<std::pair<Vid, Vid>> reported_missing;
  for (const auto& dstv : routers) {
    std::map<Vid, int> color;  // 0 unseen, 1 in progress, 2 checked
    for (const auto& srcv : routers) {
      if (srcv == dstv || fatal) continue;
      std::vector<Vid> trail;
      Vid at = srcv;
      while (at != dstv) {
        int c = color.count(at) ? color[at] : 0;
        if (c == 2) break;
        if (c == 1) {
          std::string cycle;
          bool in = false;
          for (const auto& v : trail) {
            if (v == at) in = true;
            if (in) cycle += v.str() + " -> ";
          }
          cycle += at.str();
          out.push_back({true, 0, "forwarding loop toward '" + dstv.str() + "': " + cycle});
          fatal = true;
          break;
        }
        color[at] = 1;
        trail.push_back(at);
        auto e = rs.tables[at].next.find(dstv);
        if (e == rs.tables[at].next.end()) {
          if (reported_missing.insert({at, dstv}).second)
            out.push_back({false, 0,
                           "incomplete table: no route " + at.str() + " -> " + dstv.str()});
          break;
        }
        at = e->second;
      }
      for (const auto& v : trail) color[v] = 2;
    }
    if (fatal) break;
  }

  if (fatal) return std::nullopt;
  return rs;
}

HopDecision next_hop(const RoutingTable& table, const Vid& at, const Vid& dst) {
  if (at == dst) return {HopDecision::Kind::kDeliver, {}};
  auto it = table.next.find(dst);
  if (it == table.next.end()) return {HopDecision::Kind::kNoRoute, {}};
  return {HopDecision::Kind::kForward, it->second};
}

HopDecision next_hop(const RouteSet& rs, const Vid& at, const Vid& dst) {
  auto it = rs.tables.find(at);
  if (it == rs.tables.end()) return {HopDecision::Kind::kNoRoute, {}};
  return next_hop(it->second, at, dst);
}

std::vector<Vid> route_path(const RouteSet& rs, const Vid& from, const Vid& to) {
  std::vector<Vid> path{from};
  Vid at = from;
  size_t limit = rs.tables.size() + 1;
  while (at != to) {
    if (path.size() > limit) return {};
    auto d = next_hop(rs, at, to);
    if (d.kind != HopDecision::Kind::kForward) return {};
    at = d.hop;
    path.push_back(at);
  }
  return path;
}

std::string serialize_routeset(const RouteSet& rs) {
  std::ostringstream os;
  for (const auto& [owner, table] : rs.tables) {
    os << "table " << owner.str() << "\n";
    for (const auto& [dst, hop] : table.next)
      os << "route " << dst.str() << " via " << hop.str() << "\n";
  }
  return os.str();
}

}  // namespace litelab
