#pragma once

// Imbalance-aware evaluation. Unknown labels never count as positives: they
// are excluded from the confusion cells and counted as non-positive alerts
// in ranked metrics, with their number reported alongside.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pivotlab/datamodel.hpp"

namespace pivotlab::evaluation {

enum class Truth { kPositive, kNegative, kUnknown };

using LabelSet = std::map<std::string, Truth>;
using Predictions = std::map<std::string, bool>;

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  std::optional<double> precision() const;
  std::optional<double> recall() const;
  std::optional<double> accuracy() const;

  bool operator==(const ConfusionCounts&) const = default;
};

struct ConfusionResult {
  ConfusionCounts cells;
  std::uint64_t unknown = 0;
};

// Throws ArgumentError naming the first predicted key without a label.
ConfusionResult confusion(const Predictions& predictions, const LabelSet& labels);

// precision / base_rate. Throws ArgumentError unless base_rate > 0.
double precision_lift(double precision, double base_rate);

struct PrecisionAtK {
  double precision = 0.0;
  std::uint64_t k = 0;
  std::uint64_t unknown_in_top_k = 0;
};

// Ranked keys missing from `labels` are treated as unknown.
// Throws ArgumentError for k == 0 or k > ranked.size().
PrecisionAtK precision_at_k(std::span<const std::string> ranked, const LabelSet& labels,
                            std::size_t k);

// Positives / (positives + negatives) over known labels; nullopt when no
// known label exists.
std::optional<double> base_rate_of(const LabelSet& labels);

// Number of evaluated pair keys "a|b" whose two files carry the same ssdeep.
std::uint64_t count_shared_ssdeep_pairs(const LabelSet& labels,
                                        const std::map<std::string, std::string>& ssdeep_by_sha);

struct ReportInputs {
  LabelSet labels;
  std::optional<Predictions> predictions;
  std::optional<std::vector<std::string>> ranked;
  bool labels_complete = false;
  std::optional<double> base_rate;  // overrides the label-derived rate
  std::optional<double> precision;  // direct precision when no predictions are given
  const std::map<std::string, std::string>* ssdeep_by_sha = nullptr;
};

nlohmann::json evaluation_report(const ReportInputs& in);

// `key TAB label` with label 1, 0, or -1 / ? for unknown.
LabelSet read_labels(std::istream& in);
// `key TAB 0|1`.
Predictions read_predictions(std::istream& in);
// `key TAB score`; returns keys by descending score, ties by ascending key.
std::vector<std::string> read_ranking(std::istream& in);

// Keys pair labels as "a|b".
LabelSet labels_from_pairs(std::span<const PairLabel> pairs);

}  // namespace pivotlab::evaluation
