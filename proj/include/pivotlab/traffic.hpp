#pragma once

// Session aggregation, access-pattern graphs for lateral-movement path
// scoring, and a port-popularity model for stealth-scan scoring.

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "pivotlab/datamodel.hpp"

namespace pivotlab::traffic {

inline constexpr std::int64_t kBucketSeconds = 600;

// floor(t / 600), correct for negative t as well.
std::int64_t bucket_index(std::int64_t t);

struct BucketKey {
  std::int64_t bucket_index = 0;
  HostIndex src_index = 0;
  HostIndex dst_index = 0;
  Port src_port = 0;
  Port dst_port = 0;
  std::string path;

  auto operator<=>(const BucketKey&) const = default;
};

BucketKey bucket_key(const TrafficSession& s);

// One row per BucketKey with the counters summed and the earliest start time
// kept. Sorted by key. A fixed point on its own output.
std::vector<TrafficSession> bucketize(std::span<const TrafficSession> sessions);

// Directed host graph weighted by session counts, scored as a first-order
// Markov chain with additive smoothing over the full node set:
//   P(v | u) = (w(u,v) + alpha) / (W(u) + alpha * |V|)
class AccessGraph {
 public:
  explicit AccessGraph(double alpha = 1.0);

  void add_node(HostIndex h);
  void add_edge(HostIndex src, HostIndex dst, std::uint64_t weight);

  double alpha() const { return alpha_; }
  const std::set<HostIndex>& nodes() const { return nodes_; }
  bool contains(HostIndex h) const { return nodes_.contains(h); }
  std::uint64_t weight(HostIndex src, HostIndex dst) const;
  std::uint64_t out_weight(HostIndex src) const;
  // Observed successors of `src` with their weights; empty if none.
  const std::map<HostIndex, std::uint64_t>& successors(HostIndex src) const;

  // Throws ArgumentError for hosts not in the graph.
  double transition_probability(HostIndex src, HostIndex dst) const;

  // Sum of log transition probabilities along the path; 0 for a single
  // host. Throws ArgumentError for an empty path or an unknown host.
  double path_log_probability(std::span<const HostIndex> path) const;

 private:
  double alpha_;
  std::set<HostIndex> nodes_;
  std::map<HostIndex, std::map<HostIndex, std::uint64_t>> out_;
  std::map<HostIndex, std::uint64_t> out_weight_;
};

AccessGraph build_access_graph(std::span<const TrafficSession> sessions, double alpha = 1.0);

// One graph per protocol (the `path` field).
std::map<std::string, AccessGraph> build_access_graphs_by_protocol(
    std::span<const TrafficSession> sessions, double alpha = 1.0);

// Destination-port popularity with independent ports and one reserved cell
// for ports never observed:
//   p(port) = (count(port) + alpha) / (N + alpha * (U + 1))
class PortModel {
 public:
  explicit PortModel(double alpha = 1.0);

  void add_observation(Port port, std::uint64_t times = 1);

  double alpha() const { return alpha_; }
  std::uint64_t observations() const { return total_; }
  std::uint64_t universe() const { return counts_.size(); }
  std::uint64_t count(Port port) const;
  const std::map<Port, std::uint64_t>& counts() const { return counts_; }

  // Throws ArgumentError when the model has no observations.
  double probability(Port port) const;

 private:
  double alpha_;
  std::map<Port, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// One observation per distinct (src, dst, dst_port, 10-minute bucket).
PortModel fit_port_model(std::span<const TrafficSession> sessions, double alpha = 1.0);

// -sum ln p(port). Throws ArgumentError on an unfitted model or empty set.
double scan_score(const PortModel& model, const std::set<Port>& ports);

struct SourceScore {
  HostIndex src_index = 0;
  std::int64_t window_start = 0;
  double score = 0.0;
  std::size_t port_count = 0;

  bool operator==(const SourceScore&) const = default;
};

// Scores the set of distinct destination ports each source touched per
// window. Sorted by score descending, then src_index, then window_start.
// `window_seconds` must be a positive multiple of 600.
std::vector<SourceScore> rank_sources(const PortModel& model,
                                      std::span<const TrafficSession> sessions,
                                      std::int64_t window_seconds = kBucketSeconds);

// `src_index TAB window_start TAB score`
void write_source_scores(std::ostream& out, const std::vector<SourceScore>& scores);

// One path per line, host indices joined by commas.
std::vector<std::vector<HostIndex>> read_paths(std::istream& in);

// `path TAB log_prob`, in input order.
void write_path_scores(std::ostream& out, const std::vector<std::vector<HostIndex>>& paths,
                       const std::vector<double>& log_probs);

// Shortest decimal form that round-trips.
std::string format_real(double v);

}  // namespace pivotlab::traffic
