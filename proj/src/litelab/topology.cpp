#include "litelab/topology.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "litelab/util.h"

namespace litelab {

bool Topology::has_router(const Vid& v) const { return router(v) != nullptr; }

const RouterDef* Topology::router(const Vid& v) const {
  for (const auto& r : routers)
    if (r.vid == v) return &r;
  return nullptr;
}

std::vector<Vid> Topology::neighbors(const Vid& v) const {
  std::set<Vid> out;
  for (const auto& l : links) {
    if (l.a == v) out.insert(l.b);
    if (l.b == v) out.insert(l.a);
  }
  return {out.begin(), out.end()};
}

const LinkSpec* Topology::link_between(const Vid& a, const Vid& b) const {
  for (const auto& l : links)
    if ((l.a == a && l.b == b) || (l.a == b && l.b == a)) return &l;
  return nullptr;
}

uint64_t Topology::hash() const { return fnv1a64(serialize_topology(*this)); }

// ---- parsing ----

static bool parse_qpolicy(std::string_view val, LinkSpec* l, std::string* err) {
  if (val == "droptail") {
    l->policy = QueuePolicy::kDroptail;
    return true;
  }
  if (val.substr(0, 4) == "red:") {
    auto parts = split_on(val.substr(4), ':');
    if (parts.size() != 4) {
      *err = "red wants min:max:maxp:wq";
      return false;
    }
    auto mn = parse_double(parts[0]), mx = parse_double(parts[1]);
    auto mp = parse_double(parts[2]), wq = parse_double(parts[3]);
    if (!mn || !mx || !mp || !wq) {
      *err = "bad red parameter";
      return false;
    }
    l->policy = QueuePolicy::kRed;
    l->red = RedParams{*mn, *mx, *mp, *wq};
    return true;
  }
  *err = "unknown qpolicy";
  return false;
}

static bool parse_link_attr(std::string_view key, std::string_view val, LinkSpec* l,
                            std::string* err) {
  if (key == "delay") {
    auto v = parse_double(val);
    if (!v || *v < 0) {
      *err = "delay must be >= 0";
      return false;
    }
    l->delay_ms = *v;
  } else if (key == "loss") {
    auto v = parse_double(val);
    if (!v) {
      *err = "bad loss value";
      return false;
    }
    l->loss_rate = *v;
  } else if (key == "bw") {
    if (val == "unlimited") {
      l->bandwidth_kbps = kUnlimitedBandwidth;
    } else {
      auto v = parse_double(val);
      if (!v || *v <= 0) {
        *err = "bw must be > 0 or 'unlimited'";
        return false;
      }
      l->bandwidth_kbps = *v;
    }
  } else if (key == "qlen") {
    auto v = parse_int(val);
    if (!v || *v < 1) {
      *err = "qlen must be >= 1";
      return false;
    }
    l->queue_len = (int)*v;
  } else if (key == "qpolicy") {
    return parse_qpolicy(val, l, err);
  } else if (key == "weight") {
    auto v = parse_double(val);
    if (!v || *v <= 0) {
      *err = "weight must be > 0";
      return false;
    }
    l->weight = *v;
  } else {
    *err = "unknown link attribute '" + std::string(key) + "'";
    return false;
  }
  return true;
}

std::optional<Topology> parse_topology(std::string_view text, std::vector<ParseIssue>* issues) {
  Topology t;
  std::vector<ParseIssue> local;
  auto& errs = issues ? *issues : local;
  std::set<Vid> seen;
  std::set<std::pair<Vid, Vid>> directed_pairs;

  int lineno = 0;
  for (auto raw : split_on(text, '\n')) {
    lineno++;
    std::string_view line = trim(raw);
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    auto tok = split_ws(line);
    if (tok[0] == "router") {
      if (tok.size() < 2) {
        errs.push_back({lineno, "router wants a vid"});
        continue;
      }
      RouterDef r;
      r.vid = Vid(tok[1]);
      if (!r.vid.valid()) {
        errs.push_back({lineno, "invalid vid"});
        continue;
      }
      if (seen.count(r.vid)) {
        errs.push_back({lineno, "duplicate vid '" + tok[1] + "'"});
        continue;
      }
      bool ok = true;
      for (size_t i = 2; i < tok.size(); i++) {
        auto eq = tok[i].find('=');
        if (eq == std::string::npos) {
          errs.push_back({lineno, "expected key=value, got '" + tok[i] + "'"});
          ok = false;
          break;
        }
        std::string key = tok[i].substr(0, eq), val = tok[i].substr(eq + 1);
        if (key == "app") {
          r.app = val;
        } else if (key == "handlers") {
          r.handlers = split_on(val, ',');
        } else {
          errs.push_back({lineno, "unknown router attribute '" + key + "'"});
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      seen.insert(r.vid);
      t.routers.push_back(std::move(r));
    } else if (tok[0] == "link") {
      if (tok.size() < 3) {
        errs.push_back({lineno, "link wants two vids"});
        continue;
      }
      LinkSpec l;
      l.a = Vid(tok[1]);
      l.b = Vid(tok[2]);
      if (l.a == l.b) {
        errs.push_back({lineno, "self-link on '" + tok[1] + "'"});
        continue;
      }
      bool ok = true;
      for (size_t i = 3; i < tok.size(); i++) {
        auto eq = tok[i].find('=');
        if (eq == std::string::npos) {
          errs.push_back({lineno, "expected key=value, got '" + tok[i] + "'"});
          ok = false;
          break;
        }
        std::string err;
        if (!parse_link_attr(std::string_view(tok[i]).substr(0, eq),
                             std::string_view(tok[i]).substr(eq + 1), &l, &err)) {
          errs.push_back({lineno, err});
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      if (directed_pairs.count({l.a, l.b})) {
        errs.push_back({lineno, "duplicate link " + l.a.str() + " " + l.b.str()});
        continue;
      }
      directed_pairs.insert({l.a, l.b});
      t.links.push_back(std::move(l));
    } else if (tok[0] == "option") {
      if (tok.size() != 2 || tok[1].find('=') == std::string::npos) {
        errs.push_back({lineno, "option wants key=value"});
        continue;
      }
      auto eq = tok[1].find('=');
      std::string key = tok[1].substr(0, eq), val = tok[1].substr(eq + 1);
      if (key == "connectivity" && (val == "required" || val == "optional")) {
        t.connectivity_required = val == "required";
      } else {
        errs.push_back({lineno, "unknown option '" + tok[1] + "'"});
      }
    } else {
      errs.push_back({lineno, "unknown directive '" + tok[0] + "'"});
    }
  }

  // Link endpoints must exist; the reverse orientation of a declared pair is
  // allowed once (per-direction override), more is a duplicate.
  for (const auto& l : t.links) {
    if (!seen.count(l.a))
      errs.push_back({0, "link endpoint '" + l.a.str() + "' is not a declared router"});
    if (!seen.count(l.b))
      errs.push_back({0, "link endpoint '" + l.b.str() + "' is not a declared router"});
  }

  if (!errs.empty()) return std::nullopt;
  return t;
}

static std::string fmt_double(double v) {
  char buf[64];
  snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string serialize_topology(const Topology& t) {
  std::ostringstream os;
  os << "option connectivity=" << (t.connectivity_required ? "required" : "optional") << "\n";
  for (const auto& r : t.routers) {
    os << "router " << r.vid.str();
    if (!r.app.empty()) os << " app=" << r.app;
    if (!r.handlers.empty()) {
      os << " handlers=";
      for (size_t i = 0; i < r.handlers.size(); i++) os << (i ? "," : "") << r.handlers[i];
    }
    os << "\n";
  }
  for (const auto& l : t.links) {
    os << "link " << l.a.str() << " " << l.b.str();
    if (l.delay_ms != 0) os << " delay=" << fmt_double(l.delay_ms);
    if (l.loss_rate != 0) os << " loss=" << fmt_double(l.loss_rate);
    if (!l.unlimited()) os << " bw=" << fmt_double(l.bandwidth_kbps);
    if (l.queue_len != 1000) os << " qlen=" << l.queue_len;
    if (l.policy == QueuePolicy::kRed) {
      os << " qpolicy=red:" << fmt_double(l.red.min_th) << ":" << fmt_double(l.red.max_th) << ":"
         << fmt_double(l.red.max_p) << ":" << fmt_double(l.red.w_q);
    }
    if (l.weight != 1.0) os << " weight=" << fmt_double(l.weight);
    os << "\n";
  }
  return os.str();
}

// ---- validation ----

static std::vector<std::vector<int>> component_sizes_helper(const Topology& t) {
  std::map<Vid, int> idx;
  for (size_t i = 0; i < t.routers.size(); i++) idx[t.routers[i].vid] = (int)i;
  std::vector<std::vector<int>> adj(t.routers.size());
  for (const auto& l : t.links) {
    auto ia = idx.find(l.a), ib = idx.find(l.b);
    if (ia == idx.end() || ib == idx.end()) continue;
    adj[ia->second].push_back(ib->second);
    adj[ib->second].push_back(ia->second);
  }
  std::vector<int> comp(t.routers.size(), -1);
  std::vector<std::vector<int>> comps;
  for (size_t s = 0; s < t.routers.size(); s++) {
    if (comp[s] >= 0) continue;
    std::vector<int> stack{(int)s}, members;
    comp[s] = (int)comps.size();
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      members.push_back(v);
      for (int u : adj[v])
        if (comp[u] < 0) {
          comp[u] = (int)comps.size();
          stack.push_back(u);
        }
    }
    comps.push_back(std::move(members));
  }
  return comps;
}

std::vector<Violation> validate(const Topology& t) {
  std::vector<Violation> out;
  std::set<Vid> seen;
  for (const auto& r : t.routers) {
    if (!r.vid.valid()) out.push_back({r.vid.str(), "invalid vid (empty or > 255 bytes)"});
    if (!seen.insert(r.vid).second) out.push_back({r.vid.str(), "duplicate vid"});
  }
  std::set<std::pair<Vid, Vid>> pairs;
  for (const auto& l : t.links) {
    std::string where = l.a.str() + "-" + l.b.str();
    if (l.a == l.b) out.push_back({where, "self-link"});
    if (!seen.count(l.a)) out.push_back({where, "endpoint '" + l.a.str() + "' undeclared"});
    if (!seen.count(l.b)) out.push_back({where, "endpoint '" + l.b.str() + "' undeclared"});
    if (l.loss_rate < 0 || l.loss_rate > 1)
      out.push_back({where, "loss_rate out of [0,1]: " + fmt_double(l.loss_rate)});
    if (l.bandwidth_kbps < 0) out.push_back({where, "negative bandwidth"});
    if (l.delay_ms < 0) out.push_back({where, "negative delay"});
    if (l.queue_len < 1) out.push_back({where, "queue_len must be >= 1"});
    if (l.weight <= 0) out.push_back({where, "weight must be > 0"});
    if (l.policy == QueuePolicy::kRed) {
      const auto& r = l.red;
      if (!(0 <= r.min_th && r.min_th < r.max_th && r.max_th <= l.queue_len))
        out.push_back({where, "red thresholds want 0 <= min_th < max_th <= qlen"});
      if (!(r.max_p > 0 && r.max_p <= 1)) out.push_back({where, "red max_p out of (0,1]"});
      if (!(r.w_q > 0 && r.w_q <= 1)) out.push_back({where, "red w_q out of (0,1]"});
    }
    auto key = l.a < l.b ? std::make_pair(l.a, l.b) : std::make_pair(l.b, l.a);
    // Two declarations of the same unordered pair are per-direction overrides;
    // a third is a duplicate.
    if (!pairs.insert(key).second) {
      int count = 0;
      for (const auto& o : t.links)
        if ((o.a == l.a && o.b == l.b)) count++;
      if (count > 1) out.push_back({where, "duplicate link declaration"});
    }
  }
  if (t.connectivity_required && t.routers.size() > 1) {
    auto comps = component_sizes_helper(t);
    if (comps.size() > 1) {
      std::string sizes;
      for (size_t i = 0; i < comps.size(); i++)
        sizes += (i ? "," : "") + std::to_string(comps[i].size());
      out.push_back({"topology", "disconnected: component sizes {" + sizes + "}"});
    }
  }
  return out;
}

// ---- generators ----

Topology generate_random(int n, double p, uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_random: n must be >= 1");
  if (p < 0 || p > 1) throw std::invalid_argument("generate_random: p must be in [0,1]");
  Topology t;
  t.connectivity_required = false;
  t.routers.reserve(n);
  for (int i = 0; i < n; i++) t.routers.push_back({Vid(std::to_string(i)), "", {}});
  Rng rng(seed);
  for (int i = 0; i < n; i++)
    for (int j = i + 1; j < n; j++)
      if (rng.bernoulli(p))
        t.links.push_back({Vid(std::to_string(i)), Vid(std::to_string(j))});
  return t;
}

Topology generate_scale_free(int n, int m_attach, uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_scale_free: n must be >= 1");
  if (m_attach < 1 || m_attach >= n)
    throw std::invalid_argument("generate_scale_free: want 1 <= m_attach < n");
  Topology t;
  t.connectivity_required = false;
  t.routers.reserve(n);
  for (int i = 0; i < n; i++) t.routers.push_back({Vid(std::to_string(i)), "", {}});
  Rng rng(seed);
  // repeated[] holds one entry per edge endpoint, so sampling from it is
  // degree-proportional.
  std::vector<int> repeated;
  auto add_edge = [&](int a, int b) {
    t.links.push_back({Vid(std::to_string(a)), Vid(std::to_string(b))});
    repeated.push_back(a);
    repeated.push_back(b);
  };
  for (int i = 0; i < m_attach; i++)
    for (int j = i + 1; j < m_attach; j++) add_edge(i, j);
  for (int v = m_attach; v < n; v++) {
    std::set<int> targets;
    if (repeated.empty()) targets.insert(0);  // m_attach == 1 starts from one isolated node
    // Rejection sampling for distinct targets; the seed clique guarantees at
    // least m_attach distinct nodes are present in repeated[].
    while ((int)targets.size() < m_attach && !repeated.empty())
      targets.insert(repeated[rng.next_below(repeated.size())]);
    for (int u : targets) add_edge(v, u);
  }
  return t;
}

std::optional<Topology> parse_edge_list(std::string_view text, std::vector<ParseIssue>* issues) {
  Topology t;
  t.connectivity_required = false;
  std::vector<ParseIssue> local;
  auto& errs = issues ? *issues : local;
  std::set<Vid> seen;
  std::set<std::pair<Vid, Vid>> pairs;
  int lineno = 0;
  for (auto raw : split_on(text, '\n')) {
    lineno++;
    std::string_view line = trim(raw);
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    auto tok = split_ws(line);
    if (tok.size() != 2 && tok.size() != 3) {
      errs.push_back({lineno, "want 'vid vid [weight]'"});
      continue;
    }
    LinkSpec l;
    l.a = Vid(tok[0]);
    l.b = Vid(tok[1]);
    if (l.a == l.b) {
      errs.push_back({lineno, "self-link"});
      continue;
    }
    if (tok.size() == 3) {
      auto w = parse_double(tok[2]);
      if (!w || *w <= 0) {
        errs.push_back({lineno, "bad weight"});
        continue;
      }
      l.weight = *w;
    }
    auto key = l.a < l.b ? std::make_pair(l.a, l.b) : std::make_pair(l.b, l.a);
    if (!pairs.insert(key).second) continue;  // ISP dumps repeat edges
    for (const Vid* v : {&l.a, &l.b}) {
      if (seen.insert(*v).second) t.routers.push_back({*v, "", {}});
    }
    t.links.push_back(std::move(l));
  }
  if (!errs.empty()) return std::nullopt;
  return t;
}

}  // namespace litelab
