#pragma once

// Record schemas for the malware, communication, host-signature, n-gram,
// verdict and traffic data sets, with TSV / JSON-lines readers and writers.
//
// All formats are UTF-8 with LF line endings. Readers accept an optional
// header line (recognised by the schema's first column name) and tolerate a
// trailing CR; writers never emit a header or trailing tabs.

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pivotlab/error.hpp"

namespace pivotlab {

using HostIndex = std::uint64_t;
using Port = std::uint16_t;

struct FileRecord {
  std::string sha256;
  std::string md5;
  std::string ssdeep;
  std::uint64_t size = 0;

  bool operator==(const FileRecord&) const = default;
};

// One (malware, domain, ip) contact observation.
struct CommunicationRecord {
  std::string sha256;
  std::string domain;  // lowercase
  std::string ip;      // dotted quad

  bool operator==(const CommunicationRecord&) const = default;
};

// Opaque per-service descriptor, e.g. {"product": "MySQL", "version": "5.7"}.
using ServiceDescriptor = std::map<std::string, std::string>;

struct HostSignature {
  std::string ip;
  std::map<Port, ServiceDescriptor> services;
  std::string raw;  // the JSON line exactly as read

  bool operator==(const HostSignature&) const = default;
};

// One aggregated traffic row. `min_start_time` counts seconds from
// 1912-06-23T00:00:00Z. `duration` is not part of the published schema; it
// is carried only when the input supplies a 13th column.
struct TrafficSession {
  std::int64_t min_start_time = 0;
  HostIndex src_index = 0;
  HostIndex dst_index = 0;
  Port src_port = 0;
  Port dst_port = 0;
  std::uint64_t tvolume = 0;
  std::uint64_t rtvolume = 0;
  std::uint64_t pkt = 0;
  std::uint64_t rpkt = 0;
  std::uint64_t cnt = 1;
  std::uint64_t failed_num = 0;
  std::string path;
  std::optional<std::int64_t> duration;

  bool operator==(const TrafficSession&) const = default;
};

enum class Verdict : int { kBenign = 0, kMalware = 1, kGreyware = 2 };

struct VerdictRecord {
  std::uint64_t file_index = 0;
  Verdict verdict = Verdict::kBenign;
  std::vector<std::string> family_tags;

  bool operator==(const VerdictRecord&) const = default;
};

// Byte-gram histogram. Keys are raw n-byte strings; std::string ordering is
// byte-wise (unsigned), which is the canonical write order.
struct NgramHistogram {
  int n = 4;
  std::map<std::string, std::uint64_t> counts;

  std::uint64_t total() const;
  bool operator==(const NgramHistogram&) const = default;
};

struct IndexedHistogram {
  std::uint64_t file_index = 0;
  NgramHistogram histogram;

  bool operator==(const IndexedHistogram&) const = default;
};

enum class PairLabelValue { kNegative = 0, kPositive = 1 };

// Canonical labeled pair: entity_a < entity_b byte-wise.
struct PairLabel {
  std::string entity_a;
  std::string entity_b;
  PairLabelValue label = PairLabelValue::kNegative;
  std::optional<std::string> class_key;

  bool operator==(const PairLabel&) const = default;
};

// --- field validation -------------------------------------------------------

bool is_lower_hex(std::string_view s, std::size_t length);
bool is_valid_ipv4(std::string_view s);
bool is_valid_domain(std::string_view s);
std::string to_lower(std::string_view s);

// --- readers ----------------------------------------------------------------

std::vector<FileRecord> read_file_records(std::istream& in);
void write_file_records(std::ostream& out, const std::vector<FileRecord>& recs);

// Duplicate (sha256, domain) lines collapse to the first occurrence.
std::vector<CommunicationRecord> read_communications(std::istream& in);
void write_communications(std::ostream& out,
                          const std::vector<CommunicationRecord>& recs);

// JSON lines. Each object needs "ip_str" (or "ip" as a dotted string) and may
// carry a "data" array of service objects with an integer "port".
std::vector<HostSignature> read_host_signatures(std::istream& in);
void write_host_signatures(std::ostream& out,
                           const std::vector<HostSignature>& sigs);
HostSignature parse_host_signature(std::string_view json_line,
                                   std::size_t line_no = 1);

std::vector<TrafficSession> read_traffic(std::istream& in);
void write_traffic(std::ostream& out, const std::vector<TrafficSession>& rows);

std::vector<IndexedHistogram> read_ngram_file(std::istream& in);
void write_ngram_file(std::ostream& out,
                      const std::vector<IndexedHistogram>& hists);

std::vector<VerdictRecord> read_verdicts(std::istream& in);
void write_verdicts(std::ostream& out, const std::vector<VerdictRecord>& recs);

std::vector<PairLabel> read_pair_labels(std::istream& in);
void write_pair_labels(std::ostream& out, const std::vector<PairLabel>& pairs);

// Gram token encoding for the n-gram text format: bytes outside the
// printable ASCII range, plus '\\', ':' and space, are written as \xNN.
std::string escape_gram(std::string_view gram);
std::string unescape_gram(std::string_view token);

// --- time -------------------------------------------------------------------

using SysSeconds = std::chrono::sys_seconds;

// 1912-06-23T00:00:00Z.
SysSeconds traffic_epoch();
SysSeconds to_absolute_time(std::int64_t relative_seconds);
std::string format_utc(SysSeconds t);  // YYYY-MM-DDTHH:MM:SSZ

// --- line helpers shared by the readers -------------------------------------

std::vector<std::string_view> split_tabs(std::string_view line);

}  // namespace pivotlab
