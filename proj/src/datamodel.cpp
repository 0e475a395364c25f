#include "pivotlab/datamodel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

namespace pivotlab {

namespace {

using nlohmann::json;

// Iterates the lines of a stream, stripping a trailing CR and skipping an
// optional header whose first field matches `header_key` after
// normalisation.
class LineReader {
 public:
  LineReader(std::istream& in, std::string_view header_key)
      : in_(in), header_key_(header_key) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line_no_ == 1 && is_header(line)) continue;
      if (line.empty())
        throw ParseError(line_no_, "line", "empty line");
      return true;
    }
    return false;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  bool is_header(std::string_view line) const {
    auto first = line.substr(0, line.find('\t'));
    std::string norm;
    for (char c : first) {
      if (c == '-' || c == '_' || c == ' ') continue;
      norm.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return norm == header_key_ || (header_key_ == "fileindex" && norm == "index");
  }

  std::istream& in_;
  std::string_view header_key_;
  std::size_t line_no_ = 0;
};

template <typename T>
std::optional<T> parse_integer(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if constexpr (std::is_unsigned_v<T>) {
    if (s.front() == '-' || s.front() == '+') return std::nullopt;
  }
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

template <typename T>
T require_integer(std::string_view s, std::size_t line, const char* field) {
  auto v = parse_integer<T>(s);
  if (!v) throw ParseError(line, field, "not an integer: '" + std::string(s) + "'");
  return *v;
}

Port require_port(std::string_view s, std::size_t line, const char* field) {
  auto v = require_integer<std::uint64_t>(s, line, field);
  if (v > 65535) throw ParseError(line, field, "port out of range: " + std::string(s));
  return static_cast<Port>(v);
}

void require_columns(const std::vector<std::string_view>& f, std::size_t min,
                     std::size_t max, std::size_t line) {
  if (f.size() < min || f.size() > max) {
    throw ParseError(line, "columns",
                     "expected " + std::to_string(min) +
                         (max != min ? "-" + std::to_string(max) : std::string()) +
                         " columns, got " + std::to_string(f.size()));
  }
}

bool has_space_or_tab(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string scalar_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

std::uint64_t NgramHistogram::total() const {
  std::uint64_t sum = 0;
  for (const auto& [gram, count] : counts) sum += count;
  return sum;
}

bool is_lower_hex(std::string_view s, std::size_t length) {
  return s.size() == length && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

bool is_valid_ipv4(std::string_view s) {
  int octets = 0;
  std::size_t pos = 0;
  while (true) {
    auto dot = s.find('.', pos);
    auto part = s.substr(pos, dot == std::string_view::npos ? std::string_view::npos : dot - pos);
    if (part.empty() || part.size() > 3) return false;
    auto v = parse_integer<unsigned>(part);
    if (!v || *v > 255) return false;
    ++octets;
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  return octets == 4;
}

bool is_valid_domain(std::string_view s) {
  return !s.empty() && !has_space_or_tab(s);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    auto tab = line.find('\t', pos);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  return fields;
}

// --- file records -------------------------------------------------------------

std::vector<FileRecord> read_file_records(std::istream& in) {
  std::vector<FileRecord> out;
  LineReader reader(in, "sha256");
  std::string line;
  while (reader.next(line)) {
    auto n = reader.line_no();
    auto f = split_tabs(line);
    require_columns(f, 4, 4, n);
    FileRecord r;
    r.sha256 = to_lower(f[0]);
    if (!is_lower_hex(r.sha256, 64)) throw ParseError(n, "sha256", "expected 64 hex digits");
    r.md5 = to_lower(f[1]);
    if (!is_lower_hex(r.md5, 32)) throw ParseError(n, "md5", "expected 32 hex digits");
    if (f[2].empty()) throw ParseError(n, "ssdeep", "empty");
    r.ssdeep = std::string(f[2]);
    r.size = require_integer<std::uint64_t>(f[3], n, "size");
    out.push_back(std::move(r));
  }
  return out;
}

void write_file_records(std::ostream& out, const std::vector<FileRecord>& recs) {
  for (const auto& r : recs)
    out << r.sha256 << '\t' << r.md5 << '\t' << r.ssdeep << '\t' << r.size << '\n';
}

// --- communications -----------------------------------------------------------

std::vector<CommunicationRecord> read_communications(std::istream& in) {
  std::vector<CommunicationRecord> out;
  std::unordered_set<std::string> seen;
  LineReader reader(in, "sha256");
  std::string line;
  while (reader.next(line)) {
    auto n = reader.line_no();
    auto f = split_tabs(line);
    require_columns(f, 3, 3, n);
    CommunicationRecord r;
    r.sha256 = to_lower(f[0]);
    if (!is_lower_hex(r.sha256, 64))
      throw ParseError(n, "sha256", "expected 64 hex digits, got '" + std::string(f[0]) + "'");
    r.domain = to_lower(f[1]);
    if (!is_valid_domain(r.domain)) throw ParseError(n, "domain", "empty or contains whitespace");
    if (!is_valid_ipv4(f[2]))
      throw ParseError(n, "ip", "not a dotted-quad IPv4 address: '" + std::string(f[2]) + "'");
    r.ip = std::string(f[2]);
    if (seen.insert(r.sha256 + '\t' + r.domain).second) out.push_back(std::move(r));
  }
  return out;
}

void write_communications(std::ostream& out,
                          const std::vector<CommunicationRecord>& recs) {
  for (const auto& r : recs) out << r.sha256 << '\t' << r.domain << '\t' << r.ip << '\n';
}

// --- host signatures ------------------------------------------------------------

HostSignature parse_host_signature(std::string_view json_line, std::size_t line_no) {
  json doc;
  try {
    doc = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_no, "json", e.what());
  }
  if (!doc.is_object()) throw ParseError(line_no, "json", "expected an object");

  HostSignature sig;
  const json* ip = nullptr;
  if (auto it = doc.find("ip_str"); it != doc.end()) ip = &*it;
  else if (auto it2 = doc.find("ip"); it2 != doc.end() && it2->is_string()) ip = &*it2;
  if (ip == nullptr || !ip->is_string())
    throw ParseError(line_no, "ip_str", "missing");
  sig.ip = ip->get<std::string>();
  if (!is_valid_ipv4(sig.ip)) throw ParseError(line_no, "ip_str", "not an IPv4 address");

  if (auto data = doc.find("data"); data != doc.end()) {
    if (!data->is_array()) throw ParseError(line_no, "data", "expected an array");
    for (const auto& svc : *data) {
      if (!svc.is_object()) throw ParseError(line_no, "data", "service entry is not an object");
      auto port_it = svc.find("port");
      if (port_it == svc.end() || !port_it->is_number_integer())
        throw ParseError(line_no, "port", "missing or not an integer");
      auto port = port_it->get<std::int64_t>();
      if (port < 0 || port > 65535)
        throw ParseError(line_no, "port", "out of range: " + std::to_string(port));
      auto& desc = sig.services[static_cast<Port>(port)];
      for (const auto& [key, value] : svc.items()) {
        if (key == "port" || value.is_object() || value.is_array() || value.is_null()) continue;
        desc.emplace(key, scalar_to_string(value));
      }
    }
  }
  sig.raw = std::string(json_line);
  return sig;
}

std::vector<HostSignature> read_host_signatures(std::istream& in) {
  std::vector<HostSignature> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw ParseError(n, "line", "empty line");
    out.push_back(parse_host_signature(line, n));
  }
  return out;
}

void write_host_signatures(std::ostream& out, const std::vector<HostSignature>& sigs) {
  for (const auto& s : sigs) {
    if (!s.raw.empty()) {
      out << s.raw << '\n';
      continue;
    }
    json doc;
    doc["ip_str"] = s.ip;
    doc["data"] = json::array();
    for (const auto& [port, desc] : s.services) {
      json svc = {{"port", port}};
      for (const auto& [k, v] : desc) svc[k] = v;
      doc["data"].push_back(std::move(svc));
    }
    out << doc.dump() << '\n';
  }
}

// --- traffic ----------------------------------------------------------------------

std::vector<TrafficSession> read_traffic(std::istream& in) {
  std::vector<TrafficSession> out;
  LineReader reader(in, "minstarttime");
  std::string line;
  while (reader.next(line)) {
    auto n = reader.line_no();
    auto f = split_tabs(line);
    require_columns(f, 12, 13, n);
    TrafficSession s;
    s.min_start_time = require_integer<std::int64_t>(f[0], n, "min_start_time");
    if (s.min_start_time < 0) throw InvariantError(n, "min_start_time", "negative relative time");
    s.src_index = require_integer<std::uint64_t>(f[1], n, "src_index");
    s.dst_index = require_integer<std::uint64_t>(f[2], n, "dst_index");
    s.src_port = require_port(f[3], n, "src_port");
    s.dst_port = require_port(f[4], n, "dst_port");
    s.tvolume = require_integer<std::uint64_t>(f[5], n, "tvolume");
    s.rtvolume = require_integer<std::uint64_t>(f[6], n, "rtvolume");
    s.pkt = require_integer<std::uint64_t>(f[7], n, "pkt");
    s.rpkt = require_integer<std::uint64_t>(f[8], n, "rpkt");
    s.cnt = require_integer<std::uint64_t>(f[9], n, "cnt");
    s.failed_num = require_integer<std::uint64_t>(f[10], n, "failed_num");
    if (s.cnt == 0) throw InvariantError(n, "cnt", "session count must be at least 1");
    if (s.failed_num > s.cnt) throw InvariantError(n, "failed_num", "failed_num exceeds cnt");
    if (f[11].empty() || has_space_or_tab(f[11])) throw ParseError(n, "path", "empty or contains whitespace");
    s.path = std::string(f[11]);
    if (f.size() == 13) {
      auto d = require_integer<std::int64_t>(f[12], n, "duration");
      if (d < 0) throw InvariantError(n, "duration", "negative duration");
      s.duration = d;
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_traffic(std::ostream& out, const std::vector<TrafficSession>& rows) {
  for (const auto& s : rows) {
    out << s.min_start_time << '\t' << s.src_index << '\t' << s.dst_index << '\t'
        << s.src_port << '\t' << s.dst_port << '\t' << s.tvolume << '\t' << s.rtvolume
        << '\t' << s.pkt << '\t' << s.rpkt << '\t' << s.cnt << '\t' << s.failed_num
        << '\t' << s.path;
    if (s.duration) out << '\t' << *s.duration;
    out << '\n';
  }
}

// --- n-grams ----------------------------------------------------------------------

std::string escape_gram(std::string_view gram) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(gram.size());
  for (char ch : gram) {
    auto c = static_cast<unsigned char>(ch);
    if (c > 0x20 && c < 0x7f && c != '\\' && c != ':') {
      out.push_back(ch);
    } else {
      out += "\\x";
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xf]);
    }
  }
  return out;
}

std::string unescape_gram(std::string_view token) {
  std::string out;
  for (std::size_t i = 0; i < token.size(); ++i) {
    if (token[i] != '\\') {
      out.push_back(token[i]);
      continue;
    }
    if (i + 3 >= token.size() || token[i + 1] != 'x')
      throw ArgumentError("bad escape in gram token '" + std::string(token) + "'");
    int hi = hex_value(token[i + 2]);
    int lo = hex_value(token[i + 3]);
    if (hi < 0 || lo < 0)
      throw ArgumentError("bad escape in gram token '" + std::string(token) + "'");
    out.push_back(static_cast<char>((hi << 4) | lo));
    i += 3;
  }
  return out;
}

std::vector<IndexedHistogram> read_ngram_file(std::istream& in) {
  std::vector<IndexedHistogram> out;
  LineReader reader(in, "fileindex");
  std::string line;
  while (reader.next(line)) {
    auto n = reader.line_no();
    auto f = split_tabs(line);
    if (f.size() < 2) throw ParseError(n, "columns", "line has no grams");
    IndexedHistogram ih;
    ih.file_index = require_integer<std::uint64_t>(f[0], n, "file_index");
    ih.histogram.n = 0;
    for (std::size_t i = 1; i < f.size(); ++i) {
      auto colon = f[i].rfind(':');
      if (colon == std::string_view::npos) throw ParseError(n, "ngram", "missing ':' in '" + std::string(f[i]) + "'");
      std::string gram;
      try {
        gram = unescape_gram(f[i].substr(0, colon));
      } catch (const ArgumentError& e) {
        throw ParseError(n, "ngram", e.what());
      }
      if (gram.empty() || gram.size() > 4) throw ParseError(n, "ngram", "gram must be 1-4 bytes");
      if (ih.histogram.n == 0) ih.histogram.n = static_cast<int>(gram.size());
      if (static_cast<int>(gram.size()) != ih.histogram.n)
        throw ParseError(n, "ngram", "mixed gram lengths on one line");
      auto count = require_integer<std::int64_t>(f[i].substr(colon + 1), n, "count");
      if (count <= 0) throw InvariantError(n, "count", "count must be positive");
      if (!ih.histogram.counts.emplace(std::move(gram), static_cast<std::uint64_t>(count)).second)
        throw InvariantError(n, "ngram", "duplicate gram '" + std::string(f[i].substr(0, colon)) + "'");
    }
    out.push_back(std::move(ih));
  }
  return out;
}

void write_ngram_file(std::ostream& out, const std::vector<IndexedHistogram>& hists) {
  for (const auto& ih : hists) {
    if (ih.histogram.counts.empty())
      throw ArgumentError("cannot write an empty histogram (file index " +
                          std::to_string(ih.file_index) + ")");
    out << ih.file_index;
    for (const auto& [gram, count] : ih.histogram.counts) {
      if (count == 0) throw ArgumentError("zero count in histogram");
      out << '\t' << escape_gram(gram) << ':' << count;
    }
    out << '\n';
  }
}

// --- verdicts -----------------------------------------------------------------------

std::vector<VerdictRecord> read_verdicts(std::istream& in) {
  std::vector<VerdictRecord> out;
  LineReader reader(in, "fileindex");
  std::string line;
  while (reader.next(line)) {
    auto n = reader.line_no();
    auto f = split_tabs(line);
    if (f.size() < 2) throw ParseError(n, "columns", "expected index and verdict");
    VerdictRecord r;
    r.file_index = require_integer<std::uint64_t>(f[0], n, "file_index");
    auto v = require_integer<std::int64_t>(f[1], n, "verdict");
    if (v < 0 || v > 2) throw InvariantError(n, "verdict", "verdict must be 0, 1 or 2, got " + std::to_string(v));
    r.verdict = static_cast<Verdict>(v);
    for (std::size_t i = 2; i < f.size(); ++i) {
      if (f[i].empty()) throw ParseError(n, "family_tag", "empty tag");
      r.family_tags.emplace_back(f[i]);
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_verdicts(std::ostream& out, const std::vector<VerdictRecord>& recs) {
  for (const auto& r : recs) {
    out << r.file_index << '\t' << static_cast<int>(r.verdict);
    for (const auto& t : r.family_tags) out << '\t' << t;
    out << '\n';
  }
}

// --- pair labels --------------------------------------------------------------------

std::vector<PairLabel> read_pair_labels(std::istream& in) {
  std::vector<PairLabel> out;
  LineReader reader(in, "entitya");
  std::string line;
  while (reader.next(line)) {
    auto n = reader.line_no();
    auto f = split_tabs(line);
    require_columns(f, 3, 4, n);
    PairLabel p;
    p.entity_a = std::string(f[0]);
    p.entity_b = std::string(f[1]);
    if (p.entity_a.empty() || p.entity_b.empty()) throw ParseError(n, "entity", "empty key");
    if (!(p.entity_a < p.entity_b)) throw InvariantError(n, "entity_b", "pair is not canonical (a < b)");
    if (f[2] == "1") p.label = PairLabelValue::kPositive;
    else if (f[2] == "0") p.label = PairLabelValue::kNegative;
    else throw ParseError(n, "label", "expected 0 or 1");
    if (f.size() == 4) {
      if (p.label != PairLabelValue::kPositive)
        throw InvariantError(n, "class_key", "class key on a negative pair");
      if (f[3].empty()) throw ParseError(n, "class_key", "empty");
      p.class_key = std::string(f[3]);
    }
    out.push_back(std::move(p));
  }
  return out;
}

void write_pair_labels(std::ostream& out, const std::vector<PairLabel>& pairs) {
  for (const auto& p : pairs) {
    out << p.entity_a << '\t' << p.entity_b << '\t'
        << (p.label == PairLabelValue::kPositive ? '1' : '0');
    if (p.class_key) out << '\t' << *p.class_key;
    out << '\n';
  }
}

// --- time ---------------------------------------------------------------------------

SysSeconds traffic_epoch() {
  using namespace std::chrono;
  return sys_days{year{1912} / June / 23};
}

SysSeconds to_absolute_time(std::int64_t relative_seconds) {
  if (relative_seconds < 0)
    throw ArgumentError("relative time must be non-negative, got " + std::to_string(relative_seconds));
  return traffic_epoch() + std::chrono::seconds{relative_seconds};
}

std::string format_utc(SysSeconds t) {
  using namespace std::chrono;
  auto day = floor<days>(t);
  year_month_day ymd{day};
  hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

}  // namespace pivotlab
