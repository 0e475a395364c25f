#pragma once

// Operator-domain pivoting: malware that share a filtered contact domain are
// labeled as belonging to the same operator, and hosts resolved from those
// domains are labeled as related. Negatives are sampled from the complement.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pivotlab/datamodel.hpp"

namespace pivotlab::pivoting {

inline constexpr std::uint64_t kDefaultSeed = 19120623;

struct PivotConfig {
  std::set<std::string> benign_allowlist;  // lowercase domains
  std::uint64_t max_files_per_domain = 100;
  double negative_ratio = 1.0;  // negatives emitted per positive
  std::uint64_t rng_seed = kDefaultSeed;
  bool multiclass = false;

  // Throws ArgumentError on an invalid threshold or ratio.
  void validate() const;
};

// Distinct files per domain.
using DomainPopularityIndex = std::map<std::string, std::uint64_t>;
// resolve(d): the addresses a domain is hosted on.
using ResolveMap = std::map<std::string, std::set<std::string>>;
using SignatureMap = std::map<std::string, HostSignature>;

// sha256 -> contacted domains, built once per labeling run.
class CommunicationIndex {
 public:
  explicit CommunicationIndex(std::span<const CommunicationRecord> comms);

  // Empty for an unknown hash.
  const std::set<std::string>& domains_of(std::string_view sha256) const;
  const std::map<std::string, std::set<std::string>, std::less<>>& by_file() const {
    return domains_by_file_;
  }

 private:
  std::map<std::string, std::set<std::string>, std::less<>> domains_by_file_;
};

DomainPopularityIndex build_popularity_index(std::span<const CommunicationRecord> comms);

// { d : (sha256, d) observed, d not allowlisted, popularity(d) <= D_max }.
std::set<std::string> operator_domains(std::string_view sha256, const CommunicationIndex& comms,
                                       const PivotConfig& cfg,
                                       const DomainPopularityIndex& popularity);

struct LabelSummary {
  std::uint64_t entities = 0;
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
  std::uint64_t negatives_requested = 0;
  // Requested negatives that could not be emitted because the complement
  // was exhausted.
  std::uint64_t negative_shortfall = 0;
  std::uint64_t skipped_missing_signature = 0;
  std::uint64_t unresolved_domains = 0;
};

struct LabelResult {
  std::vector<PairLabel> labels;  // sorted by (entity_a, entity_b)
  LabelSummary summary;
};

LabelResult label_malware_pairs(std::span<const CommunicationRecord> comms, const PivotConfig& cfg);

enum class HostPairMode {
  // IP pairs inside resolve(d) for every d shared by two distinct malware.
  kSharedDomainFormula,
  // IP pairs across resolve(d1) x resolve(d2) for d1 != d2 contacted by one
  // malware.
  kSharedMalwareDomains,
};

std::string_view to_string(HostPairMode mode);
HostPairMode parse_host_pair_mode(std::string_view name);

// `signatures` may be null, in which case no signature filtering happens.
// Otherwise positive pairs with an endpoint lacking a signature are skipped
// and counted, and negatives are drawn only among signed addresses.
LabelResult label_host_pairs(std::span<const CommunicationRecord> comms, const PivotConfig& cfg,
                             const ResolveMap& resolve, const SignatureMap* signatures,
                             HostPairMode mode = HostPairMode::kSharedDomainFormula);

// resolve(d) as observed in the communication data set's IP column.
ResolveMap resolve_map_from_communications(std::span<const CommunicationRecord> comms);

// TSV `domain TAB ip`, one address per line.
ResolveMap read_resolve_map(std::istream& in);
void write_resolve_map(std::ostream& out, const ResolveMap& resolve);

// Throws ArgumentError on a duplicated address.
SignatureMap index_signatures(std::vector<HostSignature> sigs);

// Allowlist file: one domain per line, '#' comments and blank lines ignored.
std::set<std::string> read_allowlist(std::istream& in);

// Uniform sample, without replacement, of `count` unordered index pairs
// (i < j) over `n` entities that are not in `excluded`. Keys in `excluded`
// are i * n + j. Returns every complement pair when fewer than `count`
// exist. The result is sorted.
std::vector<std::pair<std::size_t, std::size_t>> sample_complement_pairs(
    std::size_t n, const std::set<std::uint64_t>& excluded, std::uint64_t count,
    std::mt19937_64& rng);

}  // namespace pivotlab::pivoting
