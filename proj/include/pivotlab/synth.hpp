#pragma once

// Seeded generators for schema-valid corpora with planted ground truth.
// Planted signals never overlap the background traffic, so every pipeline
// can be checked against what was put in.

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pivotlab/bindshell.hpp"
#include "pivotlab/datamodel.hpp"
#include "pivotlab/pivoting.hpp"

namespace pivotlab::synth {

struct ScanPlant {
  bool enabled = true;
  std::size_t port_count = 10;
  std::optional<HostIndex> target;  // random server when unset
};

struct LateralPlant {
  bool enabled = true;
  std::size_t path_length = 4;  // hosts, not hops
};

struct BindShellPlant {
  bool enabled = true;
  std::int64_t window_gap_seconds = 30;
  Port exploit_port = 445;
  Port shell_port = 4444;
};

struct TrafficSpec {
  std::size_t host_count = 50;
  std::size_t server_count = 8;
  std::size_t sessions_per_host = 16;
  std::size_t bucket_count = 12;
  std::int64_t start_time = 0;
  ScanPlant scan;
  LateralPlant lateral;
  BindShellPlant bindshell;
};

struct ScenarioSpec {
  std::uint64_t rng_seed = pivoting::kDefaultSeed;
  std::size_t n_operators = 2;
  std::size_t malware_per_operator = 2;
  std::size_t domains_per_operator = 1;
  std::size_t benign_domain_count = 3;
  // Benign domains are contacted by more files than this; keep it equal to
  // the pivoting D_max the corpus will be labeled with.
  std::uint64_t popularity_threshold = 100;
  std::size_t file_count = 20;  // n-gram corpus
  TrafficSpec traffic;

  // Throws ArgumentError on a spec that cannot be generated.
  void validate() const;
};

struct GroundTruth {
  std::set<std::pair<std::string, std::string>> malware_pairs;
  // Positive host pairs under the shared-domain formula.
  std::set<std::pair<std::string, std::string>> host_pairs;
  std::vector<HostIndex> scanners;
  std::vector<HostIndex> lateral_path;
  std::vector<bindshell::PairKey> bindshell_pairs;
};

struct OperatorCorpus {
  std::vector<CommunicationRecord> comms;
  std::vector<FileRecord> files;
  pivoting::ResolveMap resolve;
  std::vector<HostSignature> signatures;
  std::vector<std::string> benign_domains;
  GroundTruth truth;
};

struct TrafficScenario {
  std::vector<TrafficSession> sessions;  // sorted by time
  GroundTruth truth;
};

struct FileCorpus {
  std::vector<std::string> contents;
  std::vector<VerdictRecord> verdicts;
};

// Fixed list of well-known domains used as benign contacts.
std::span<const std::string_view> benign_domain_names();

OperatorCorpus gen_operator_corpus(const ScenarioSpec& spec);
TrafficScenario gen_traffic_scenario(const ScenarioSpec& spec);
FileCorpus gen_file_corpus(const ScenarioSpec& spec);

nlohmann::json to_json(const GroundTruth& truth);

}  // namespace pivotlab::synth
