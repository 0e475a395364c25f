#include "pivotlab/traffic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

namespace pivotlab::traffic {

std::int64_t bucket_index(std::int64_t t) {
  auto q = t / kBucketSeconds;
  if (t % kBucketSeconds < 0) --q;
  return q;
}

BucketKey bucket_key(const TrafficSession& s) {
  return {bucket_index(s.min_start_time), s.src_index, s.dst_index, s.src_port, s.dst_port, s.path};
}

std::vector<TrafficSession> bucketize(std::span<const TrafficSession> sessions) {
  struct Acc {
    TrafficSession row;
    std::int64_t end = 0;
    bool has_duration = false;
  };
  std::map<BucketKey, Acc> groups;
  for (const auto& s : sessions) {
    auto [it, inserted] = groups.try_emplace(bucket_key(s));
    auto& acc = it->second;
    const std::int64_t end = s.min_start_time + s.duration.value_or(0);
    if (inserted) {
      acc.row = s;
      acc.row.duration.reset();
      acc.end = end;
      acc.has_duration = s.duration.has_value();
      continue;
    }
    auto& r = acc.row;
    r.min_start_time = std::min(r.min_start_time, s.min_start_time);
    r.tvolume += s.tvolume;
    r.rtvolume += s.rtvolume;
    r.pkt += s.pkt;
    r.rpkt += s.rpkt;
    r.cnt += s.cnt;
    r.failed_num += s.failed_num;
    acc.end = std::max(acc.end, end);
    acc.has_duration = acc.has_duration || s.duration.has_value();
  }
  std::vector<TrafficSession> out;
  out.reserve(groups.size());
  for (auto& [key, acc] : groups) {
    if (acc.has_duration) acc.row.duration = acc.end - acc.row.min_start_time;
    out.push_back(std::move(acc.row));
  }
  return out;
}

// --- access graph -------------------------------------------------------------

AccessGraph::AccessGraph(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ArgumentError("alpha must be positive");
}

void AccessGraph::add_node(HostIndex h) { nodes_.insert(h); }

void AccessGraph::add_edge(HostIndex src, HostIndex dst, std::uint64_t weight) {
  nodes_.insert(src);
  nodes_.insert(dst);
  if (weight == 0) return;
  out_[src][dst] += weight;
  out_weight_[src] += weight;
}

std::uint64_t AccessGraph::weight(HostIndex src, HostIndex dst) const {
  auto it = out_.find(src);
  if (it == out_.end()) return 0;
  auto jt = it->second.find(dst);
  return jt == it->second.end() ? 0 : jt->second;
}

std::uint64_t AccessGraph::out_weight(HostIndex src) const {
  auto it = out_weight_.find(src);
  return it == out_weight_.end() ? 0 : it->second;
}

const std::map<HostIndex, std::uint64_t>& AccessGraph::successors(HostIndex src) const {
  static const std::map<HostIndex, std::uint64_t> kNone;
  auto it = out_.find(src);
  return it == out_.end() ? kNone : it->second;
}

double AccessGraph::transition_probability(HostIndex src, HostIndex dst) const {
  for (auto h : {src, dst})
    if (!contains(h)) throw ArgumentError("host " + std::to_string(h) + " is not in the access graph");
  const double denom = static_cast<double>(out_weight(src)) + alpha_ * static_cast<double>(nodes_.size());
  return (static_cast<double>(weight(src, dst)) + alpha_) / denom;
}

double AccessGraph::path_log_probability(std::span<const HostIndex> path) const {
  if (path.empty()) throw ArgumentError("empty path");
  for (auto h : path)
    if (!contains(h)) throw ArgumentError("host " + std::to_string(h) + " is not in the access graph");
  double lp = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    lp += std::log(transition_probability(path[i], path[i + 1]));
  return lp;
}

AccessGraph build_access_graph(std::span<const TrafficSession> sessions, double alpha) {
  AccessGraph g(alpha);
  for (const auto& s : sessions) g.add_edge(s.src_index, s.dst_index, s.cnt);
  return g;
}

std::map<std::string, AccessGraph> build_access_graphs_by_protocol(
    std::span<const TrafficSession> sessions, double alpha) {
  std::map<std::string, AccessGraph> out;
  for (const auto& s : sessions)
    out.try_emplace(s.path, alpha).first->second.add_edge(s.src_index, s.dst_index, s.cnt);
  return out;
}

// --- port model -----------------------------------------------------------------

PortModel::PortModel(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ArgumentError("alpha must be positive");
}

void PortModel::add_observation(Port port, std::uint64_t times) {
  if (times == 0) return;
  counts_[port] += times;
  total_ += times;
}

std::uint64_t PortModel::count(Port port) const {
  auto it = counts_.find(port);
  return it == counts_.end() ? 0 : it->second;
}

double PortModel::probability(Port port) const {
  if (total_ == 0) throw ArgumentError("port model has no observations");
  const double denom =
      static_cast<double>(total_) + alpha_ * (static_cast<double>(counts_.size()) + 1.0);
  return (static_cast<double>(count(port)) + alpha_) / denom;
}

PortModel fit_port_model(std::span<const TrafficSession> sessions, double alpha) {
  PortModel model(alpha);
  std::set<std::tuple<HostIndex, HostIndex, Port, std::int64_t>> seen;
  for (const auto& s : sessions) {
    if (seen.emplace(s.src_index, s.dst_index, s.dst_port, bucket_index(s.min_start_time)).second)
      model.add_observation(s.dst_port);
  }
  return model;
}

double scan_score(const PortModel& model, const std::set<Port>& ports) {
  if (model.observations() == 0) throw ArgumentError("port model is not fitted");
  if (ports.empty()) throw ArgumentError("empty port set");
  double score = 0.0;
  for (auto p : ports) score -= std::log(model.probability(p));
  return score;
}

std::vector<SourceScore> rank_sources(const PortModel& model,
                                      std::span<const TrafficSession> sessions,
                                      std::int64_t window_seconds) {
  if (window_seconds <= 0 || window_seconds % kBucketSeconds != 0)
    throw ArgumentError("window must be a positive multiple of 600 seconds");
  std::map<std::pair<HostIndex, std::int64_t>, std::set<Port>> windows;
  for (const auto& s : sessions) {
    auto w = s.min_start_time / window_seconds;
    if (s.min_start_time % window_seconds < 0) --w;
    windows[{s.src_index, w * window_seconds}].insert(s.dst_port);
  }
  std::vector<SourceScore> out;
  out.reserve(windows.size());
  for (const auto& [key, ports] : windows)
    out.push_back({key.first, key.second, scan_score(model, ports), ports.size()});
  std::sort(out.begin(), out.end(), [](const SourceScore& a, const SourceScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.src_index, a.window_start) < std::tie(b.src_index, b.window_start);
  });
  return out;
}

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_source_scores(std::ostream& out, const std::vector<SourceScore>& scores) {
  for (const auto& s : scores)
    out << s.src_index << '\t' << s.window_start << '\t' << format_real(s.score) << '\n';
}

std::vector<std::vector<HostIndex>> read_paths(std::istream& in) {
  std::vector<std::vector<HostIndex>> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw ParseError(n, "path", "empty path");
    std::vector<HostIndex> path;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      auto comma = line.find(',', pos);
      auto tok = std::string_view(line).substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      HostIndex h{};
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), h);
      if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(n, "path", "bad host index '" + std::string(tok) + "'");
      path.push_back(h);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    out.push_back(std::move(path));
  }
  return out;
}

void write_path_scores(std::ostream& out, const std::vector<std::vector<HostIndex>>& paths,
                       const std::vector<double>& log_probs) {
  if (paths.size() != log_probs.size()) throw ArgumentError("paths and scores differ in length");
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (std::size_t j = 0; j < paths[i].size(); ++j) out << (j ? "," : "") << paths[i][j];
    out << '\t' << format_real(log_probs[i]) << '\n';
  }
}

}  // namespace pivotlab::traffic
