#include "pivotlab/pivoting.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_set>

namespace pivotlab::pivoting {

namespace {

// Complements up to this size are enumerated and sampled with std::sample;
// larger ones use rejection sampling unless the request covers a quarter of
// the complement.
constexpr std::uint64_t kEnumerateLimit = 1u << 20;

// Products within 1e-9 relative of an integer round to it, so 0.1 * 30 asks
// for 3 negatives, not 4.
std::uint64_t requested_negatives(double ratio, std::uint64_t positives) {
  const double x = ratio * static_cast<double>(positives);
  const double r = std::nearbyint(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, x)) return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::ceil(x));
}

// Converts positive index pairs plus the sampled complement into sorted labels.
LabelResult assemble(const std::vector<std::string>& entities,
                     const std::map<std::uint64_t, std::string>& positives, const PivotConfig& cfg,
                     LabelSummary summary) {
  const std::size_t n = entities.size();
  LabelResult result;
  summary.entities = n;
  summary.positives = positives.size();
  summary.negatives_requested = requested_negatives(cfg.negative_ratio, positives.size());

  std::set<std::uint64_t> excluded;
  for (const auto& [key, cls] : positives) excluded.insert(excluded.end(), key);
  std::mt19937_64 rng(cfg.rng_seed);
  auto negatives = sample_complement_pairs(n, excluded, summary.negatives_requested, rng);
  summary.negatives = negatives.size();
  summary.negative_shortfall = summary.negatives_requested - negatives.size();

  result.labels.reserve(positives.size() + negatives.size());
  for (const auto& [key, cls] : positives) {
    PairLabel p{entities[key / n], entities[key % n], PairLabelValue::kPositive, std::nullopt};
    if (cfg.multiclass) p.class_key = cls;
    result.labels.push_back(std::move(p));
  }
  for (const auto& [i, j] : negatives)
    result.labels.push_back({entities[i], entities[j], PairLabelValue::kNegative, std::nullopt});
  std::sort(result.labels.begin(), result.labels.end(), [](const PairLabel& x, const PairLabel& y) {
    return std::tie(x.entity_a, x.entity_b) < std::tie(y.entity_a, y.entity_b);
  });
  result.summary = summary;
  return result;
}

std::map<std::string, std::set<std::string>> operator_domains_by_file(
    const CommunicationIndex& index, const PivotConfig& cfg, const DomainPopularityIndex& pop) {
  std::map<std::string, std::set<std::string>> out;
  for (const auto& [sha, domains] : index.by_file())
    out.emplace(sha, operator_domains(sha, index, cfg, pop));
  return out;
}

}  // namespace

void PivotConfig::validate() const {
  if (max_files_per_domain < 1) throw ArgumentError("max_files_per_domain must be at least 1");
  if (!(negative_ratio > 0.0) || !std::isfinite(negative_ratio))
    throw ArgumentError("negative_ratio must be a positive finite number");
}

CommunicationIndex::CommunicationIndex(std::span<const CommunicationRecord> comms) {
  for (const auto& r : comms) domains_by_file_[r.sha256].insert(r.domain);
}

const std::set<std::string>& CommunicationIndex::domains_of(std::string_view sha256) const {
  static const std::set<std::string> kEmpty;
  auto it = domains_by_file_.find(sha256);
  return it == domains_by_file_.end() ? kEmpty : it->second;
}

DomainPopularityIndex build_popularity_index(std::span<const CommunicationRecord> comms) {
  std::set<std::pair<std::string_view, std::string_view>> distinct;
  for (const auto& r : comms) distinct.emplace(r.domain, r.sha256);
  DomainPopularityIndex idx;
  for (const auto& [domain, sha] : distinct) ++idx[std::string(domain)];
  return idx;
}

std::set<std::string> operator_domains(std::string_view sha256, const CommunicationIndex& comms,
                                       const PivotConfig& cfg,
                                       const DomainPopularityIndex& popularity) {
  std::set<std::string> out;
  for (const auto& d : comms.domains_of(sha256)) {
    if (cfg.benign_allowlist.contains(d)) continue;
    auto it = popularity.find(d);
    if (it == popularity.end() || it->second > cfg.max_files_per_domain) continue;
    out.insert(d);
  }
  return out;
}

LabelResult label_malware_pairs(std::span<const CommunicationRecord> comms, const PivotConfig& cfg) {
  cfg.validate();
  CommunicationIndex index(comms);
  auto pop = build_popularity_index(comms);
  auto od = operator_domains_by_file(index, cfg, pop);

  std::vector<std::string> entities;
  entities.reserve(od.size());
  std::map<std::string, std::vector<std::size_t>> files_by_domain;
  for (const auto& [sha, domains] : od) {
    for (const auto& d : domains) files_by_domain[d].push_back(entities.size());
    entities.push_back(sha);
  }

  // Domains are visited in ascending order, so the first insertion of a pair
  // carries the smallest mutual domain.
  const std::uint64_t n = entities.size();
  std::map<std::uint64_t, std::string> positives;
  for (const auto& [domain, files] : files_by_domain) {
    for (std::size_t a = 0; a < files.size(); ++a)
      for (std::size_t b = a + 1; b < files.size(); ++b)
        positives.emplace(files[a] * n + files[b], domain);
  }
  return assemble(entities, positives, cfg, {});
}

std::string_view to_string(HostPairMode mode) {
  switch (mode) {
    case HostPairMode::kSharedDomainFormula:
      return "shared_domain_formula";
    case HostPairMode::kSharedMalwareDomains:
      return "shared_malware_domains";
  }
  return "unknown";
}

HostPairMode parse_host_pair_mode(std::string_view name) {
  if (name == "shared_domain_formula") return HostPairMode::kSharedDomainFormula;
  if (name == "shared_malware_domains") return HostPairMode::kSharedMalwareDomains;
  throw ArgumentError("unknown host-pair mode '" + std::string(name) + "'");
}

LabelResult label_host_pairs(std::span<const CommunicationRecord> comms, const PivotConfig& cfg,
                             const ResolveMap& resolve, const SignatureMap* signatures,
                             HostPairMode mode) {
  cfg.validate();
  if (resolve.empty()) throw ArgumentError("resolve map is empty; host labeling is impossible");

  CommunicationIndex index(comms);
  auto pop = build_popularity_index(comms);
  auto od = operator_domains_by_file(index, cfg, pop);

  auto signed_ip = [&](const std::string& ip) {
    return signatures == nullptr || signatures->contains(ip);
  };

  std::set<std::string> universe;
  for (const auto& [domain, ips] : resolve)
    for (const auto& ip : ips)
      if (signed_ip(ip)) universe.insert(ip);
  std::vector<std::string> entities(universe.begin(), universe.end());
  std::map<std::string_view, std::uint64_t> position;
  for (std::size_t i = 0; i < entities.size(); ++i) position.emplace(entities[i], i);
  const std::uint64_t n = entities.size();

  LabelSummary summary;
  std::set<std::pair<std::string, std::string>> skipped;
  std::set<std::string> unresolved;
  std::map<std::uint64_t, std::string> positives;

  auto resolved = [&](const std::string& d) -> const std::set<std::string>* {
    auto it = resolve.find(d);
    if (it == resolve.end()) {
      unresolved.insert(d);
      return nullptr;
    }
    return &it->second;
  };
  auto add_pair = [&](const std::string& x, const std::string& y, const std::string& cls) {
    if (x == y) return;
    const auto& a = std::min(x, y);
    const auto& b = std::max(x, y);
    if (!signed_ip(a) || !signed_ip(b)) {
      skipped.emplace(a, b);
      return;
    }
    auto key = position.at(a) * n + position.at(b);
    auto [it, inserted] = positives.emplace(key, cls);
    if (!inserted && cls < it->second) it->second = cls;
  };

  if (mode == HostPairMode::kSharedDomainFormula) {
    std::map<std::string, std::uint64_t> sharing;
    for (const auto& [sha, domains] : od)
      for (const auto& d : domains) ++sharing[d];
    for (const auto& [d, files] : sharing) {
      if (files < 2) continue;
      const auto* ips = resolved(d);
      if (ips == nullptr) continue;
      for (auto i = ips->begin(); i != ips->end(); ++i)
        for (auto j = std::next(i); j != ips->end(); ++j) add_pair(*i, *j, d);
    }
  } else {
    for (const auto& [sha, domains] : od) {
      for (auto d1 = domains.begin(); d1 != domains.end(); ++d1) {
        const auto* ips1 = resolved(*d1);
        for (auto d2 = std::next(d1); d2 != domains.end(); ++d2) {
          const auto* ips2 = resolved(*d2);
          if (ips1 == nullptr || ips2 == nullptr) continue;
          for (const auto& a : *ips1)
            for (const auto& b : *ips2) add_pair(a, b, *d1);
        }
      }
    }
  }

  summary.skipped_missing_signature = skipped.size();
  summary.unresolved_domains = unresolved.size();
  return assemble(entities, positives, cfg, summary);
}

ResolveMap resolve_map_from_communications(std::span<const CommunicationRecord> comms) {
  ResolveMap out;
  for (const auto& r : comms) out[r.domain].insert(r.ip);
  return out;
}

ResolveMap read_resolve_map(std::istream& in) {
  ResolveMap out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto f = split_tabs(line);
    if (n == 1 && f.size() == 2 && to_lower(f[0]) == "domain") continue;
    if (f.size() != 2) throw ParseError(n, "columns", "expected domain and ip");
    auto domain = to_lower(f[0]);
    if (!is_valid_domain(domain)) throw ParseError(n, "domain", "empty or contains whitespace");
    if (!is_valid_ipv4(f[1])) throw ParseError(n, "ip", "not an IPv4 address");
    out[domain].insert(std::string(f[1]));
  }
  return out;
}

void write_resolve_map(std::ostream& out, const ResolveMap& resolve) {
  for (const auto& [domain, ips] : resolve)
    for (const auto& ip : ips) out << domain << '\t' << ip << '\n';
}

SignatureMap index_signatures(std::vector<HostSignature> sigs) {
  SignatureMap out;
  for (auto& s : sigs) {
    auto ip = s.ip;
    if (!out.emplace(ip, std::move(s)).second)
      throw ArgumentError("duplicate host signature for " + ip);
  }
  return out;
}

std::set<std::string> read_allowlist(std::istream& in) {
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos || line[begin] == '#') continue;
    auto end = line.find_last_not_of(" \t\r");
    out.insert(to_lower(std::string_view(line).substr(begin, end - begin + 1)));
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> sample_complement_pairs(
    std::size_t n, const std::set<std::uint64_t>& excluded, std::uint64_t count,
    std::mt19937_64& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (n < 2 || count == 0) return out;
  const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t complement = total - excluded.size();
  if (complement == 0) return out;

  if (count >= complement || complement <= kEnumerateLimit || count * 4 >= complement) {
    std::vector<std::pair<std::size_t, std::size_t>> all;
    all.reserve(complement);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (!excluded.contains(static_cast<std::uint64_t>(i) * n + j)) all.emplace_back(i, j);
    if (count >= all.size()) return all;
    std::sample(all.begin(), all.end(), std::back_inserter(out), count, rng);
    return out;
  }

  // Drawing two distinct indices and ordering them is uniform over unordered
  // pairs.
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::unordered_set<std::uint64_t> chosen;
  while (chosen.size() < count) {
    auto i = pick(rng);
    auto j = pick(rng);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    auto key = static_cast<std::uint64_t>(i) * n + j;
    if (excluded.contains(key)) continue;
    chosen.insert(key);
  }
  std::vector<std::uint64_t> keys(chosen.begin(), chosen.end());
  std::sort(keys.begin(), keys.end());
  out.reserve(keys.size());
  for (auto k : keys) out.emplace_back(k / n, k % n);
  return out;
}

}  // namespace pivotlab::pivoting
