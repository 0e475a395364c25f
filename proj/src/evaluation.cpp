#include "pivotlab/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>

namespace pivotlab::evaluation {

namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

template <typename Fn>
void for_each_row(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto f = split_tabs(line);
    if (f.size() != 2 || f[0].empty()) throw ParseError(n, "columns", "expected key and value");
    fn(n, f[0], f[1]);
  }
}

}  // namespace

std::optional<double> ConfusionCounts::precision() const {
  if (tp + fp == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

std::optional<double> ConfusionCounts::recall() const {
  if (tp + fn == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

std::optional<double> ConfusionCounts::accuracy() const {
  if (total() == 0) return std::nullopt;
  return static_cast<double>(tp + tn) / static_cast<double>(total());
}

ConfusionResult confusion(const Predictions& predictions, const LabelSet& labels) {
  ConfusionResult r;
  for (const auto& [key, predicted] : predictions) {
    auto it = labels.find(key);
    if (it == labels.end()) throw ArgumentError("no label for predicted key '" + key + "'");
    switch (it->second) {
      case Truth::kUnknown:
        ++r.unknown;
        break;
      case Truth::kPositive:
        ++(predicted ? r.cells.tp : r.cells.fn);
        break;
      case Truth::kNegative:
        ++(predicted ? r.cells.fp : r.cells.tn);
        break;
    }
  }
  return r;
}

double precision_lift(double precision, double base_rate) {
  if (!(base_rate > 0.0)) throw ArgumentError("base rate must be positive");
  if (precision < 0.0 || precision > 1.0) throw ArgumentError("precision must lie in [0, 1]");
  return precision / base_rate;
}

PrecisionAtK precision_at_k(std::span<const std::string> ranked, const LabelSet& labels,
                            std::size_t k) {
  if (k == 0 || k > ranked.size())
    throw ArgumentError("k must be in 1.." + std::to_string(ranked.size()) + ", got " + std::to_string(k));
  PrecisionAtK r;
  r.k = k;
  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) {
    auto it = labels.find(ranked[i]);
    if (it == labels.end() || it->second == Truth::kUnknown) ++r.unknown_in_top_k;
    else if (it->second == Truth::kPositive) ++hits;
  }
  r.precision = static_cast<double>(hits) / static_cast<double>(k);
  return r;
}

std::optional<double> base_rate_of(const LabelSet& labels) {
  std::uint64_t pos = 0, known = 0;
  for (const auto& [key, t] : labels) {
    if (t == Truth::kUnknown) continue;
    ++known;
    if (t == Truth::kPositive) ++pos;
  }
  if (known == 0) return std::nullopt;
  return static_cast<double>(pos) / static_cast<double>(known);
}

std::uint64_t count_shared_ssdeep_pairs(const LabelSet& labels,
                                        const std::map<std::string, std::string>& ssdeep_by_sha) {
  std::uint64_t n = 0;
  for (const auto& [key, t] : labels) {
    auto bar = key.find('|');
    if (bar == std::string::npos) continue;
    auto a = ssdeep_by_sha.find(key.substr(0, bar));
    auto b = ssdeep_by_sha.find(key.substr(bar + 1));
    if (a != ssdeep_by_sha.end() && b != ssdeep_by_sha.end() && a->second == b->second) ++n;
  }
  return n;
}

json evaluation_report(const ReportInputs& in) {
  json report;
  std::uint64_t pos = 0, neg = 0, unk = 0;
  for (const auto& [key, t] : in.labels) {
    if (t == Truth::kPositive) ++pos;
    else if (t == Truth::kNegative) ++neg;
    else ++unk;
  }
  report["labels"] = {{"positive", pos}, {"negative", neg}, {"unknown", unk}};
  report["labels_complete"] = in.labels_complete;

  std::optional<double> precision = in.precision;
  if (in.predictions) {
    auto c = confusion(*in.predictions, in.labels);
    report["cells"] = {{"tp", c.cells.tp}, {"fp", c.cells.fp}, {"tn", c.cells.tn}, {"fn", c.cells.fn}};
    report["unknown_predicted"] = c.unknown;
    report["accuracy"] = optional_number(c.cells.accuracy());
    precision = c.cells.precision();
    report["recall"] = in.labels_complete ? optional_number(c.cells.recall()) : json(nullptr);
  }
  report["precision"] = optional_number(precision);

  auto base = in.base_rate ? in.base_rate : base_rate_of(in.labels);
  report["base_rate"] = optional_number(base);
  if (precision && base && *base > 0.0) report["lift"] = precision_lift(*precision, *base);
  else report["lift"] = nullptr;

  if (in.ranked) {
    json at = json::object();
    json unknown_at = json::object();
    for (std::size_t k : {1u, 10u, 100u}) {
      if (k > in.ranked->size()) continue;
      auto p = precision_at_k(*in.ranked, in.labels, k);
      at[std::to_string(k)] = p.precision;
      unknown_at[std::to_string(k)] = p.unknown_in_top_k;
    }
    report["precision_at"] = std::move(at);
    report["unknown_in_top"] = std::move(unknown_at);
  }
  if (in.ssdeep_by_sha != nullptr)
    report["dependence"] = {{"shared_ssdeep_pairs", count_shared_ssdeep_pairs(in.labels, *in.ssdeep_by_sha)}};
  return report;
}

LabelSet read_labels(std::istream& in) {
  LabelSet out;
  for_each_row(in, [&](std::size_t n, std::string_view key, std::string_view v) {
    Truth t;
    if (v == "1") t = Truth::kPositive;
    else if (v == "0") t = Truth::kNegative;
    else if (v == "-1" || v == "?") t = Truth::kUnknown;
    else throw ParseError(n, "label", "expected 1, 0, -1 or ?");
    if (!out.emplace(std::string(key), t).second) throw ParseError(n, "key", "duplicate key");
  });
  return out;
}

Predictions read_predictions(std::istream& in) {
  Predictions out;
  for_each_row(in, [&](std::size_t n, std::string_view key, std::string_view v) {
    if (v != "0" && v != "1") throw ParseError(n, "prediction", "expected 0 or 1");
    if (!out.emplace(std::string(key), v == "1").second) throw ParseError(n, "key", "duplicate key");
  });
  return out;
}

std::vector<std::string> read_ranking(std::istream& in) {
  std::vector<std::pair<double, std::string>> rows;
  for_each_row(in, [&](std::size_t n, std::string_view key, std::string_view v) {
    double score{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), score);
    if (ec != std::errc() || ptr != v.data() + v.size() || std::isnan(score))
      throw ParseError(n, "score", "not a number");
    rows.emplace_back(score, std::string(key));
  });
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (auto& r : rows) out.push_back(std::move(r.second));
  return out;
}

LabelSet labels_from_pairs(std::span<const PairLabel> pairs) {
  LabelSet out;
  for (const auto& p : pairs)
    out[p.entity_a + "|" + p.entity_b] =
        p.label == PairLabelValue::kPositive ? Truth::kPositive : Truth::kNegative;
  return out;
}

}  // namespace pivotlab::evaluation
