#pragma once

// Two-phase connection pairing and the aggregative feature set for bind /
// reverse shell candidates.
//
// Phase ports are destination ports. Aggregative counts are taken over the
// unfiltered pair population of the whole period, never over the candidates
// that survive the noise filter.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "pivotlab/datamodel.hpp"

namespace pivotlab::bindshell {

inline constexpr std::int64_t kDefaultWindowSeconds = 120;
inline constexpr std::int64_t kDefaultLookbackSeconds = 7 * 24 * 3600;

enum class Direction {
  kBind,     // A->B then A->B on another port
  kReverse,  // A->B then B->A
};

// Refers to sessions by position in the session span it was built from.
struct ConnectionPair {
  HostIndex source = 0;
  HostIndex destination = 0;
  std::size_t phase1 = 0;
  std::size_t phase2 = 0;
  Direction direction = Direction::kBind;

  bool operator==(const ConnectionPair&) const = default;
};

// Returns true to keep the pair.
using NoiseFilter =
    std::function<bool(const ConnectionPair&, std::span<const TrafficSession> sessions)>;

struct PairingResult {
  std::vector<ConnectionPair> population;  // every pair, unfiltered
  std::vector<ConnectionPair> candidates;  // pairs the filter kept
  std::size_t filtered_out = 0;
};

// Emits every ordered pair (s1, s2) with 0 <= start(s2) - start(s1) <=
// window: bind pairs share (src, dst) and differ in dst_port; reverse pairs
// have s2 running dst -> src. Loopback sessions only form bind pairs.
PairingResult pair_connections(std::span<const TrafficSession> sessions,
                               std::int64_t window_seconds = kDefaultWindowSeconds,
                               const NoiseFilter& noise_filter = {});

// "none" keeps everything; "failed-phase2" drops pairs whose follow-up
// session failed every time.
NoiseFilter make_noise_filter(std::string_view name);

struct BindShellCandidate {
  std::uint64_t index = 0;
  int label = -1;  // 1 forward shell, 0 not, -1 missing
  HostIndex source_host_id = 0;
  bool is_new = false;

  std::uint64_t s_phase1_initiators_hosts = 0;
  std::uint64_t s_phase2_initiators_hosts = 0;
  std::uint64_t s_phase1_initiators_ports = 0;
  std::uint64_t s_phase2_initiators_ports = 0;
  std::uint64_t s_port_count = 0;
  Port s_src_port_phase1 = 0;
  Port s_src_port_phase2 = 0;
  std::uint64_t s_pair_phase1_cnt = 0;
  std::uint64_t s_pair_phase2_cnt = 0;
  std::int64_t s_start_time_phase1 = 0;
  std::int64_t s_start_time_phase2 = 0;
  std::int64_t s_duration_phase1 = 0;
  std::int64_t s_duration_phase2 = 0;
  Port s_dst_port_phase1 = 0;
  Port s_dst_port_phase2 = 0;
  std::uint64_t s_volume_phase1 = 0;
  std::uint64_t s_volume_phase2 = 0;
  std::uint64_t s_rvolume_phase1 = 0;
  std::uint64_t s_rvolume_phase2 = 0;
  std::string s_path_phase1;
  std::string s_path_phase2;
  std::uint64_t s_spfss_unique_srcs = 0;
  std::uint64_t s_arb_host_count = 0;
  std::uint64_t s_arb_port_count = 0;

  // Not emitted; kept so callers can match candidates back to hosts.
  HostIndex destination_host_id = 0;
  Direction direction = Direction::kBind;

  bool operator==(const BindShellCandidate&) const = default;
};

// Identifies a pair independently of session positions.
struct PairKey {
  HostIndex source = 0;
  HostIndex destination = 0;
  std::int64_t start_time_phase1 = 0;
  Port dst_port_phase1 = 0;
  Port dst_port_phase2 = 0;

  auto operator<=>(const PairKey&) const = default;
};

PairKey key_of(const ConnectionPair& pair, std::span<const TrafficSession> sessions);

using LabelMap = std::map<PairKey, int>;

struct FeatureConfig {
  std::int64_t lookback_seconds = kDefaultLookbackSeconds;
  // Inclusive bounds of the corpus period; sessions of a pair outside it
  // are rejected. Unset means the span of the session list.
  std::optional<std::pair<std::int64_t, std::int64_t>> period;
  unsigned workers = 1;
  const LabelMap* labels = nullptr;
};

// Sorted by (s_start_time_phase1, source_host_id, s_dst_port_phase1,
// s_dst_port_phase2) with further tie-breaks; `index` is the output position.
std::vector<BindShellCandidate> compute_candidate_features(
    std::span<const ConnectionPair> candidates, std::span<const ConnectionPair> population,
    std::span<const TrafficSession> sessions, const FeatureConfig& cfg = {});

// Column names, in output order.
const std::vector<std::string>& feature_header();

// Header line then one row per candidate; is_new is written as 0/1.
void write_candidates(std::ostream& out, const std::vector<BindShellCandidate>& rows);

// TSV `source TAB destination TAB start_time_phase1 TAB dst_port_phase1 TAB
// dst_port_phase2 TAB label` with label in {1, 0, -1}.
LabelMap read_pair_labels(std::istream& in);

}  // namespace pivotlab::bindshell
