#include "pivotlab/bindshell.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <istream>
#include <ostream>
#include <set>
#include <thread>

namespace pivotlab::bindshell {

namespace {

using HostPort = std::pair<HostIndex, Port>;

// Read-only lookups over the unfiltered pair population.
struct PopulationIndex {
  std::map<HostPort, std::set<HostIndex>> dsts_by_src_p1;
  std::map<HostPort, std::set<Port>> p2_by_src_p1;
  std::map<HostPort, std::set<HostIndex>> dsts_by_src_p2;
  std::map<HostPort, std::set<Port>> p1_by_src_p2;
  std::map<std::pair<Port, Port>, std::uint64_t> pairs_by_ports;
  std::map<std::pair<HostIndex, HostIndex>, std::set<Port>> p1_by_src_dst;
  std::map<std::pair<HostIndex, HostIndex>, std::set<Port>> p2_by_src_dst;
  std::map<std::tuple<HostIndex, Port, Port>, std::set<HostIndex>> srcs_by_dst_ports;
  std::map<HostPort, std::set<HostIndex>> srcs_by_dst_p1;
  std::map<HostPort, std::set<Port>> p2_by_dst_p1;
  // Start times at which each host appears on either end of a session.
  std::map<HostIndex, std::vector<std::int64_t>> seen_at;
};

template <typename Map, typename Key>
std::uint64_t size_at(const Map& m, const Key& k) {
  auto it = m.find(k);
  return it == m.end() ? 0 : it->second.size();
}

void check_pair(const ConnectionPair& p, std::span<const TrafficSession> sessions,
                std::int64_t lo, std::int64_t hi) {
  for (auto i : {p.phase1, p.phase2}) {
    if (i >= sessions.size())
      throw ArgumentError("pair references session " + std::to_string(i) + " outside the corpus");
    auto t = sessions[i].min_start_time;
    if (t < lo || t > hi)
      throw ArgumentError("pair references a session at t=" + std::to_string(t) +
                          " outside the corpus period");
  }
}

PopulationIndex build_index(std::span<const ConnectionPair> population,
                            std::span<const TrafficSession> sessions) {
  PopulationIndex ix;
  for (const auto& q : population) {
    const Port p1 = sessions[q.phase1].dst_port;
    const Port p2 = sessions[q.phase2].dst_port;
    const auto s = q.source;
    const auto d = q.destination;
    ix.dsts_by_src_p1[{s, p1}].insert(d);
    ix.p2_by_src_p1[{s, p1}].insert(p2);
    ix.dsts_by_src_p2[{s, p2}].insert(d);
    ix.p1_by_src_p2[{s, p2}].insert(p1);
    ++ix.pairs_by_ports[{p1, p2}];
    ix.p1_by_src_dst[{s, d}].insert(p1);
    ix.p2_by_src_dst[{s, d}].insert(p2);
    ix.srcs_by_dst_ports[{d, p1, p2}].insert(s);
    ix.srcs_by_dst_p1[{d, p1}].insert(s);
    ix.p2_by_dst_p1[{d, p1}].insert(p2);
  }
  for (const auto& s : sessions) {
    ix.seen_at[s.src_index].push_back(s.min_start_time);
    if (s.dst_index != s.src_index) ix.seen_at[s.dst_index].push_back(s.min_start_time);
  }
  for (auto& [host, times] : ix.seen_at) std::sort(times.begin(), times.end());
  return ix;
}

bool seen_in(const PopulationIndex& ix, HostIndex h, std::int64_t from, std::int64_t until) {
  auto it = ix.seen_at.find(h);
  if (it == ix.seen_at.end()) return false;
  auto lo = std::lower_bound(it->second.begin(), it->second.end(), from);
  return lo != it->second.end() && *lo < until;
}

BindShellCandidate evaluate(const ConnectionPair& c, std::span<const TrafficSession> sessions,
                            const PopulationIndex& ix, const FeatureConfig& cfg) {
  const auto& a = sessions[c.phase1];
  const auto& b = sessions[c.phase2];
  const Port p1 = a.dst_port;
  const Port p2 = b.dst_port;
  const auto s = c.source;
  const auto d = c.destination;

  BindShellCandidate r;
  r.source_host_id = s;
  r.destination_host_id = d;
  r.direction = c.direction;
  if (cfg.labels != nullptr) {
    auto it = cfg.labels->find(key_of(c, sessions));
    if (it != cfg.labels->end()) r.label = it->second;
  }
  const auto since = a.min_start_time - cfg.lookback_seconds;
  r.is_new = !seen_in(ix, s, since, a.min_start_time) && !seen_in(ix, d, since, a.min_start_time);

  r.s_phase1_initiators_hosts = size_at(ix.dsts_by_src_p1, HostPort{s, p1});
  r.s_phase2_initiators_hosts = size_at(ix.dsts_by_src_p2, HostPort{s, p2});
  r.s_phase1_initiators_ports = size_at(ix.p2_by_src_p1, HostPort{s, p1});
  r.s_phase2_initiators_ports = size_at(ix.p1_by_src_p2, HostPort{s, p2});
  auto pc = ix.pairs_by_ports.find({p1, p2});
  r.s_port_count = pc == ix.pairs_by_ports.end() ? 0 : pc->second;
  r.s_src_port_phase1 = a.src_port;
  r.s_src_port_phase2 = b.src_port;
  r.s_pair_phase1_cnt = size_at(ix.p1_by_src_dst, std::pair{s, d});
  r.s_pair_phase2_cnt = size_at(ix.p2_by_src_dst, std::pair{s, d});
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
  r.s_spfss_unique_srcs = size_at(ix.srcs_by_dst_ports, std::tuple{d, p1, p2});
  r.s_arb_host_count = size_at(ix.srcs_by_dst_p1, HostPort{d, p1});
  r.s_arb_port_count = size_at(ix.p2_by_dst_p1, HostPort{d, p1});
  return r;
}

}  // namespace

PairingResult pair_connections(std::span<const TrafficSession> sessions,
                               std::int64_t window_seconds, const NoiseFilter& noise_filter) {
  if (window_seconds <= 0) throw ArgumentError("pairing window must be positive");

  std::map<std::pair<HostIndex, HostIndex>, std::vector<std::size_t>> by_hosts;
  for (std::size_t i = 0; i < sessions.size(); ++i)
    by_hosts[{sessions[i].src_index, sessions[i].dst_index}].push_back(i);
  for (auto& [hosts, idx] : by_hosts) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
      return sessions[x].min_start_time < sessions[y].min_start_time;
    });
  }

  // Sessions of `group` starting in [t, t + window].
  auto in_window = [&](const std::vector<std::size_t>& group, std::int64_t t) {
    auto lo = std::lower_bound(group.begin(), group.end(), t, [&](std::size_t i, std::int64_t v) {
      return sessions[i].min_start_time < v;
    });
    auto hi = std::upper_bound(lo, group.end(), t + window_seconds, [&](std::int64_t v, std::size_t i) {
      return v < sessions[i].min_start_time;
    });
    return std::pair{lo, hi};
  };

  PairingResult out;
  for (const auto& [hosts, group] : by_hosts) {
    const auto [src, dst] = hosts;
    const std::vector<std::size_t>* back = nullptr;
    if (src != dst) {
      auto it = by_hosts.find({dst, src});
      if (it != by_hosts.end()) back = &it->second;
    }
    for (auto i : group) {
      const auto& s1 = sessions[i];
      auto [lo, hi] = in_window(group, s1.min_start_time);
      for (auto it = lo; it != hi; ++it) {
        if (*it == i || sessions[*it].dst_port == s1.dst_port) continue;
        out.population.push_back({src, dst, i, *it, Direction::kBind});
      }
      if (back == nullptr) continue;
      auto [rlo, rhi] = in_window(*back, s1.min_start_time);
      for (auto it = rlo; it != rhi; ++it)
        out.population.push_back({src, dst, i, *it, Direction::kReverse});
    }
  }
  std::sort(out.population.begin(), out.population.end(),
            [](const ConnectionPair& x, const ConnectionPair& y) {
              return std::tie(x.phase1, x.direction, x.phase2) <
                     std::tie(y.phase1, y.direction, y.phase2);
            });

  for (const auto& p : out.population) {
    if (!noise_filter || noise_filter(p, sessions)) out.candidates.push_back(p);
    else ++out.filtered_out;
  }
  return out;
}

NoiseFilter make_noise_filter(std::string_view name) {
  if (name.empty() || name == "none") return {};
  if (name == "failed-phase2") {
    return [](const ConnectionPair& p, std::span<const TrafficSession> sessions) {
      const auto& s = sessions[p.phase2];
      return s.failed_num < s.cnt;
    };
  }
  throw ArgumentError("unknown noise filter '" + std::string(name) + "'");
}

PairKey key_of(const ConnectionPair& pair, std::span<const TrafficSession> sessions) {
  return {pair.source, pair.destination, sessions[pair.phase1].min_start_time,
          sessions[pair.phase1].dst_port, sessions[pair.phase2].dst_port};
}

std::vector<BindShellCandidate> compute_candidate_features(
    std::span<const ConnectionPair> candidates, std::span<const ConnectionPair> population,
    std::span<const TrafficSession> sessions, const FeatureConfig& cfg) {
  if (cfg.lookback_seconds < 0) throw ArgumentError("lookback must be non-negative");
  std::int64_t lo = std::numeric_limits<std::int64_t>::min();
  std::int64_t hi = std::numeric_limits<std::int64_t>::max();
  if (cfg.period) std::tie(lo, hi) = *cfg.period;
  for (const auto& p : population) check_pair(p, sessions, lo, hi);
  for (const auto& p : candidates) check_pair(p, sessions, lo, hi);

  const auto ix = build_index(population, sessions);
  std::vector<BindShellCandidate> out(candidates.size());
  const unsigned workers =
      std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(candidates.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < candidates.size(); ++i) out[i] = evaluate(candidates[i], sessions, ix, cfg);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < candidates.size(); i += workers)
          out[i] = evaluate(candidates[i], sessions, ix, cfg);
      });
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const BindShellCandidate& x, const BindShellCandidate& y) {
    return std::tie(x.s_start_time_phase1, x.source_host_id, x.s_dst_port_phase1, x.s_dst_port_phase2,
                    x.destination_host_id, x.s_start_time_phase2, x.direction) <
           std::tie(y.s_start_time_phase1, y.source_host_id, y.s_dst_port_phase1, y.s_dst_port_phase2,
                    y.destination_host_id, y.s_start_time_phase2, y.direction);
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].index = i;
  return out;
}

const std::vector<std::string>& feature_header() {
  static const std::vector<std::string> kHeader = {
      "index", "label", "source_host_id", "is_new",
      "s_phase1_initiators_hosts", "s_phase2_initiators_hosts",
      "s_phase1_initiators_ports", "s_phase2_initiators_ports",
      "s_port_count", "s_src_port_phase1", "s_src_port_phase2",
      "s_pair_phase1_cnt", "s_pair_phase2_cnt",
      "s_start_time_phase1", "s_start_time_phase2",
      "s_duration_phase1", "s_duration_phase2",
      "s_dst_port_phase1", "s_dst_port_phase2",
      "s_volume_phase1", "s_volume_phase2",
      "s_rvolume_phase1", "s_rvolume_phase2",
      "s_path_phase1", "s_path_phase2",
      "s_spfss_unique_srcs", "s_arb_host_count", "s_arb_port_count"};
  return kHeader;
}

void write_candidates(std::ostream& out, const std::vector<BindShellCandidate>& rows) {
  const auto& header = feature_header();
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "\t" : "") << header[i];
  out << '\n';
  for (const auto& r : rows) {
    out << r.index << '\t' << r.label << '\t' << r.source_host_id << '\t' << (r.is_new ? 1 : 0)
        << '\t' << r.s_phase1_initiators_hosts << '\t' << r.s_phase2_initiators_hosts << '\t'
        << r.s_phase1_initiators_ports << '\t' << r.s_phase2_initiators_ports << '\t'
        << r.s_port_count << '\t' << r.s_src_port_phase1 << '\t' << r.s_src_port_phase2 << '\t'
        << r.s_pair_phase1_cnt << '\t' << r.s_pair_phase2_cnt << '\t' << r.s_start_time_phase1
        << '\t' << r.s_start_time_phase2 << '\t' << r.s_duration_phase1 << '\t'
        << r.s_duration_phase2 << '\t' << r.s_dst_port_phase1 << '\t' << r.s_dst_port_phase2
        << '\t' << r.s_volume_phase1 << '\t' << r.s_volume_phase2 << '\t' << r.s_rvolume_phase1
        << '\t' << r.s_rvolume_phase2 << '\t' << r.s_path_phase1 << '\t' << r.s_path_phase2
        << '\t' << r.s_spfss_unique_srcs << '\t' << r.s_arb_host_count << '\t'
        << r.s_arb_port_count << '\n';
  }
}

LabelMap read_pair_labels(std::istream& in) {
  LabelMap out;
  std::string line;
  std::size_t n = 0;
  auto num = [&](std::string_view s, const char* field) {
    std::int64_t v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
      throw ParseError(n, field, "not an integer");
    return v;
  };
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto f = split_tabs(line);
    if (n == 1 && !f.empty() && f[0] == "source") continue;
    if (f.size() != 6) throw ParseError(n, "columns", "expected 6 columns");
    PairKey k;
    k.source = static_cast<HostIndex>(num(f[0], "source"));
    k.destination = static_cast<HostIndex>(num(f[1], "destination"));
    k.start_time_phase1 = num(f[2], "start_time_phase1");
    auto p1 = num(f[3], "dst_port_phase1");
    auto p2 = num(f[4], "dst_port_phase2");
    if (p1 < 0 || p1 > 65535 || p2 < 0 || p2 > 65535) throw ParseError(n, "port", "out of range");
    k.dst_port_phase1 = static_cast<Port>(p1);
    k.dst_port_phase2 = static_cast<Port>(p2);
    auto label = num(f[5], "label");
    if (label < -1 || label > 1) throw ParseError(n, "label", "expected 1, 0 or -1");
    out[k] = static_cast<int>(label);
  }
  return out;
}

}  // namespace pivotlab::bindshell
