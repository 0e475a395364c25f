#pragma once

// Brute-force reference implementations. They share no code with the
// library beyond the record structs.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "pivotlab/bindshell.hpp"
#include "pivotlab/datamodel.hpp"

namespace oracle {

using pivotlab::CommunicationRecord;
using pivotlab::HostIndex;
using pivotlab::Port;
using pivotlab::TrafficSession;

using StringPair = std::pair<std::string, std::string>;

inline StringPair canonical(const std::string& a, const std::string& b) {
  return a < b ? StringPair{a, b} : StringPair{b, a};
}

// --- pivoting -------------------------------------------------------------

inline std::map<std::string, std::set<std::string>> filtered_domains(
    const std::vector<CommunicationRecord>& comms, const std::set<std::string>& allowlist,
    std::uint64_t dmax) {
  std::map<std::string, std::set<std::string>> files_of_domain;
  std::map<std::string, std::set<std::string>> domains_of_file;
  for (const auto& r : comms) {
    files_of_domain[r.domain].insert(r.sha256);
    domains_of_file[r.sha256].insert(r.domain);
  }
  for (auto& [sha, domains] : domains_of_file) {
    std::set<std::string> kept;
    for (const auto& d : domains)
      if (!allowlist.count(d) && files_of_domain[d].size() <= dmax) kept.insert(d);
    domains = kept;
  }
  return domains_of_file;
}

// Every file pair, every domain pair: O(n^2 * |D|).
inline std::map<StringPair, std::string> malware_positives(
    const std::vector<CommunicationRecord>& comms, const std::set<std::string>& allowlist,
    std::uint64_t dmax) {
  auto od = filtered_domains(comms, allowlist, dmax);
  std::vector<std::string> files;
  for (const auto& [sha, d] : od) files.push_back(sha);
  std::map<StringPair, std::string> out;
  for (std::size_t i = 0; i < files.size(); ++i) {
    for (std::size_t j = 0; j < files.size(); ++j) {
      if (i == j) continue;
      std::vector<std::string> common;
      std::set_intersection(od[files[i]].begin(), od[files[i]].end(), od[files[j]].begin(),
                            od[files[j]].end(), std::back_inserter(common));
      if (!common.empty()) out[canonical(files[i], files[j])] = common.front();
    }
  }
  return out;
}

// For every malware pair and every domain both keep, every IP pair inside
// resolve(d).
inline std::map<StringPair, std::string> host_positives_formula(
    const std::vector<CommunicationRecord>& comms, const std::set<std::string>& allowlist,
    std::uint64_t dmax, const std::map<std::string, std::set<std::string>>& resolve,
    const std::set<std::string>* signed_ips) {
  auto od = filtered_domains(comms, allowlist, dmax);
  std::map<StringPair, std::string> out;
  for (const auto& [m1, d1] : od) {
    for (const auto& [m2, d2] : od) {
      if (m1 == m2) continue;
      for (const auto& d : d1) {
        if (!d2.count(d) || !resolve.count(d)) continue;
        for (const auto& a : resolve.at(d)) {
          for (const auto& b : resolve.at(d)) {
            if (a == b) continue;
            if (signed_ips && (!signed_ips->count(a) || !signed_ips->count(b))) continue;
            auto key = canonical(a, b);
            auto it = out.find(key);
            if (it == out.end() || d < it->second) out[key] = d;
          }
        }
      }
    }
  }
  return out;
}

// For every malware and every ordered pair of distinct kept domains, the
// cross product of their resolve sets.
inline std::map<StringPair, std::string> host_positives_prose(
    const std::vector<CommunicationRecord>& comms, const std::set<std::string>& allowlist,
    std::uint64_t dmax, const std::map<std::string, std::set<std::string>>& resolve,
    const std::set<std::string>* signed_ips) {
  auto od = filtered_domains(comms, allowlist, dmax);
  std::map<StringPair, std::string> out;
  for (const auto& [m, ds] : od) {
    for (const auto& x : ds) {
      for (const auto& y : ds) {
        if (x == y || !resolve.count(x) || !resolve.count(y)) continue;
        for (const auto& a : resolve.at(x)) {
          for (const auto& b : resolve.at(y)) {
            if (a == b) continue;
            if (signed_ips && (!signed_ips->count(a) || !signed_ips->count(b))) continue;
            auto key = canonical(a, b);
            const auto& cls = std::min(x, y);
            auto it = out.find(key);
            if (it == out.end() || cls < it->second) out[key] = cls;
          }
        }
      }
    }
  }
  return out;
}

// --- traffic --------------------------------------------------------------

inline std::int64_t floor_div(std::int64_t t, std::int64_t w) {
  std::int64_t q = t / w;
  while (q * w > t) --q;
  while ((q + 1) * w <= t) ++q;
  return q;
}

struct GroupSums {
  std::int64_t min_time = 0;
  std::uint64_t tvolume = 0, rtvolume = 0, pkt = 0, rpkt = 0, cnt = 0, failed = 0;
  bool operator==(const GroupSums&) const = default;
};

using GroupKey = std::tuple<std::int64_t, HostIndex, HostIndex, Port, Port, std::string>;

inline std::map<GroupKey, GroupSums> group_by(const std::vector<TrafficSession>& rows) {
  std::map<GroupKey, GroupSums> out;
  for (const auto& s : rows) {
    GroupKey k{s.min_start_time >= 0 ? s.min_start_time / 600 : floor_div(s.min_start_time, 600),
               s.src_index, s.dst_index, s.src_port, s.dst_port, s.path};
    auto [it, fresh] = out.try_emplace(k);
    auto& g = it->second;
    g.min_time = fresh ? s.min_start_time : std::min(g.min_time, s.min_start_time);
    g.tvolume += s.tvolume;
    g.rtvolume += s.rtvolume;
    g.pkt += s.pkt;
    g.rpkt += s.rpkt;
    g.cnt += s.cnt;
    g.failed += s.failed_num;
  }
  return out;
}

// Distinct (src, dst, dport, bucket) tuples per port.
inline std::map<Port, std::uint64_t> port_counts(const std::vector<TrafficSession>& rows) {
  std::set<std::tuple<HostIndex, HostIndex, Port, std::int64_t>> seen;
  for (const auto& s : rows) seen.emplace(s.src_index, s.dst_index, s.dst_port, floor_div(s.min_start_time, 600));
  std::map<Port, std::uint64_t> out;
  for (const auto& t : seen) ++out[std::get<2>(t)];
  return out;
}

// --- bind shell -------------------------------------------------------------

struct OraclePair {
  std::size_t i, j;
  bool reverse;
};

inline std::vector<OraclePair> all_pairs(const std::vector<TrafficSession>& s, std::int64_t window) {
  std::vector<OraclePair> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      const auto dt = s[j].min_start_time - s[i].min_start_time;
      if (dt < 0 || dt > window) continue;
      if (i != j && s[i].src_index == s[j].src_index && s[i].dst_index == s[j].dst_index &&
          s[i].dst_port != s[j].dst_port)
        out.push_back({i, j, false});
      if (s[i].src_index != s[i].dst_index && s[j].src_index == s[i].dst_index &&
          s[j].dst_index == s[i].src_index)
        out.push_back({i, j, true});
    }
  }
  return out;
}

// Recounts every feature of the pair (i, j) by scanning the whole population.
inline pivotlab::bindshell::BindShellCandidate recount(const std::vector<TrafficSession>& s,
                                                       const std::vector<OraclePair>& population,
                                                       const OraclePair& c, std::int64_t lookback) {
  const auto& a = s[c.i];
  const auto& b = s[c.j];
  const HostIndex src = a.src_index, dst = a.dst_index;
  const Port p1 = a.dst_port, p2 = b.dst_port;
  std::set<HostIndex> h1, h2, spf, arb_h;
  std::set<Port> q1, q2, pp1, pp2, arb_p;
  std::uint64_t port_count = 0;
  for (const auto& q : population) {
    const auto& x = s[q.i];
    const auto& y = s[q.j];
    const HostIndex qs = x.src_index, qd = x.dst_index;
    const Port r1 = x.dst_port, r2 = y.dst_port;
    if (qs == src && r1 == p1) { h1.insert(qd); q1.insert(r2); }
    if (qs == src && r2 == p2) { h2.insert(qd); q2.insert(r1); }
    if (r1 == p1 && r2 == p2) ++port_count;
    if (qs == src && qd == dst) { pp1.insert(r1); pp2.insert(r2); }
    if (qd == dst && r1 == p1 && r2 == p2) spf.insert(qs);
    if (qd == dst && r1 == p1) { arb_h.insert(qs); arb_p.insert(r2); }
  }
  bool seen = false;
  for (const auto& t : s) {
    if (t.min_start_time >= a.min_start_time - lookback && t.min_start_time < a.min_start_time) {
      for (auto h : {t.src_index, t.dst_index})
        if (h == src || h == dst) seen = true;
    }
  }
  pivotlab::bindshell::BindShellCandidate r;
  r.source_host_id = src;
  r.destination_host_id = dst;
  r.direction = c.reverse ? pivotlab::bindshell::Direction::kReverse : pivotlab::bindshell::Direction::kBind;
  r.is_new = !seen;
  r.s_phase1_initiators_hosts = h1.size();
  r.s_phase2_initiators_hosts = h2.size();
  r.s_phase1_initiators_ports = q1.size();
  r.s_phase2_initiators_ports = q2.size();
  r.s_port_count = port_count;
  r.s_src_port_phase1 = a.src_port;
  r.s_src_port_phase2 = b.src_port;
  r.s_pair_phase1_cnt = pp1.size();
  r.s_pair_phase2_cnt = pp2.size();
  r.s_start_time_phase1 = a.min_start_time;
  r.s_start_time_phase2 = b.min_start_time;
  r.s_duration_phase1 = a.duration.value_or(0);
  r.s_duration_phase2 = b.duration.value_or(0);
  r.s_dst_port_phase1 = p1;
  r.s_dst_port_phase2 = p2;
  r.s_volume_phase1 = a.tvolume;
  r.s_volume_phase2 = b.tvolume;
  r.s_rvolume_phase1 = a.rtvolume;
  r.s_rvolume_phase2 = b.rtvolume;
  r.s_path_phase1 = a.path;
  r.s_path_phase2 = b.path;
  r.s_spfss_unique_srcs = spf.size();
  r.s_arb_host_count = arb_h.size();
  r.s_arb_port_count = arb_p.size();
  return r;
}

// Sorted the same way as the library output; `index` and `label` are left
// for the caller to compare separately.
inline std::vector<pivotlab::bindshell::BindShellCandidate> recount_all(
    const std::vector<TrafficSession>& s, std::int64_t window, std::int64_t lookback) {
  auto population = all_pairs(s, window);
  std::vector<pivotlab::bindshell::BindShellCandidate> out;
  for (const auto& c : population) out.push_back(recount(s, population, c, lookback));
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return std::tie(x.s_start_time_phase1, x.source_host_id, x.s_dst_port_phase1, x.s_dst_port_phase2,
                    x.destination_host_id, x.s_start_time_phase2, x.direction) <
           std::tie(y.s_start_time_phase1, y.source_host_id, y.s_dst_port_phase1, y.s_dst_port_phase2,
                    y.destination_host_id, y.s_start_time_phase2, y.direction);
  });
  for (std::size_t k = 0; k < out.size(); ++k) out[k].index = k;
  return out;
}

// Total order over every field but `index`, for comparing outputs whose
// rows tie on the sort key.
inline void sort_fully(std::vector<pivotlab::bindshell::BindShellCandidate>& rows) {
  auto key = [](const pivotlab::bindshell::BindShellCandidate& c) {
    return std::tuple{c.s_start_time_phase1, c.source_host_id, c.s_dst_port_phase1, c.s_dst_port_phase2,
                      c.destination_host_id, c.s_start_time_phase2, c.direction, c.s_src_port_phase1,
                      c.s_src_port_phase2, c.s_volume_phase1, c.s_volume_phase2, c.s_rvolume_phase1,
                      c.s_rvolume_phase2, c.s_path_phase1, c.s_path_phase2, c.s_duration_phase1,
                      c.s_duration_phase2, c.label};
  };
  std::stable_sort(rows.begin(), rows.end(), [&](const auto& x, const auto& y) { return key(x) < key(y); });
  for (auto& r : rows) r.index = 0;
}

// --- n-grams ------------------------------------------------------------------

inline std::map<std::string, std::uint64_t> sliding_window(const std::string& content, std::size_t n) {
  std::map<std::string, std::uint64_t> out;
  for (std::size_t i = 0; i + n <= content.size(); ++i) ++out[content.substr(i, n)];
  return out;
}

// --- random corpora -------------------------------------------------------

inline std::string random_hex(std::mt19937_64& rng, std::size_t len) {
  static const char* kDigits = "0123456789abcdef";
  std::string s(len, '0');
  for (auto& c : s) c = kDigits[rng() % 16];
  return s;
}

inline std::string random_ip(std::mt19937_64& rng) {
  return std::to_string(rng() % 256) + "." + std::to_string(rng() % 256) + "." +
         std::to_string(rng() % 256) + "." + std::to_string(rng() % 256);
}

// `files` malware each contacting 1..4 of `domains` names, some via
// popular names so the D_max filter matters.
inline std::vector<CommunicationRecord> random_comms(std::mt19937_64& rng, std::size_t files,
                                                     std::size_t domains) {
  std::vector<std::string> shas, names;
  for (std::size_t i = 0; i < files; ++i) shas.push_back(random_hex(rng, 64));
  for (std::size_t i = 0; i < domains; ++i) names.push_back("d" + std::to_string(i) + ".example");
  std::vector<CommunicationRecord> out;
  std::set<StringPair> seen;
  for (const auto& sha : shas) {
    const auto k = 1 + rng() % 4;
    for (std::size_t j = 0; j < k; ++j) {
      // Low-numbered names are drawn more often.
      auto d = names[std::min<std::size_t>(rng() % domains, rng() % domains)];
      if (seen.emplace(sha, d).second) out.push_back({sha, d, random_ip(rng)});
    }
  }
  return out;
}

inline std::vector<TrafficSession> random_sessions(std::mt19937_64& rng, std::size_t count,
                                                   std::size_t hosts, std::int64_t span) {
  static const Port kPorts[] = {22, 53, 80, 443, 445, 3389, 4444, 8080};
  static const char* kPaths[] = {"tcp", "udp", "icmp"};
  std::vector<TrafficSession> out;
  for (std::size_t i = 0; i < count; ++i) {
    TrafficSession s;
    s.min_start_time = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(span));
    s.src_index = rng() % hosts;
    s.dst_index = rng() % hosts;
    s.src_port = static_cast<Port>(rng() % 65536);
    s.dst_port = kPorts[rng() % 8];
    s.tvolume = rng() % 100000;
    s.rtvolume = rng() % 100000;
    s.pkt = rng() % 100;
    s.rpkt = rng() % 100;
    s.cnt = 1 + rng() % 3;
    s.failed_num = rng() % (s.cnt + 1);
    s.path = kPaths[rng() % 3];
    out.push_back(s);
  }
  return out;
}

}  // namespace oracle
