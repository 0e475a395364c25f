#include "pivotlab/ngrams.hpp"

#include <algorithm>
#include <string>
#include <thread>

namespace pivotlab::ngrams {

NgramHistogram extract(std::string_view content, int n) {
  if (n < 1 || n > 4) throw ArgumentError("gram length must be in 1..4, got " + std::to_string(n));
  if (content.size() < static_cast<std::size_t>(n))
    throw ArgumentError("content of " + std::to_string(content.size()) +
                        " bytes is shorter than gram length " + std::to_string(n));
  NgramHistogram h;
  h.n = n;
  const std::size_t windows = content.size() - n + 1;
  for (std::size_t i = 0; i < windows; ++i) ++h.counts[std::string(content.substr(i, n))];
  return h;
}

NgramHistogram marginalize_prefix(const NgramHistogram& hist, int k) {
  if (k < 1 || k >= hist.n)
    throw ArgumentError("prefix length must be in 1.." + std::to_string(hist.n - 1) + ", got " +
                        std::to_string(k));
  NgramHistogram out;
  out.n = k;
  for (const auto& [gram, count] : hist.counts) out.counts[gram.substr(0, k)] += count;
  return out;
}

void merge_into(NgramHistogram& into, const NgramHistogram& other) {
  if (into.counts.empty()) into.n = other.n;
  if (into.n != other.n) throw ArgumentError("cannot merge histograms of different gram lengths");
  for (const auto& [gram, count] : other.counts) into.counts[gram] += count;
}

std::vector<NgramHistogram> extract_all(std::span<const std::string_view> contents, int n,
                                        unsigned workers) {
  std::vector<NgramHistogram> out(contents.size());
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(contents.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < contents.size(); ++i) out[i] = extract(contents[i], n);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < contents.size(); i += workers) out[i] = extract(contents[i], n);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

double median_total(std::span<const NgramHistogram> hists) {
  if (hists.empty()) return 0.0;
  std::vector<std::uint64_t> totals;
  totals.reserve(hists.size());
  for (const auto& h : hists) totals.push_back(h.total());
  std::sort(totals.begin(), totals.end());
  auto mid = totals.size() / 2;
  if (totals.size() % 2 == 1) return static_cast<double>(totals[mid]);
  return (static_cast<double>(totals[mid - 1]) + static_cast<double>(totals[mid])) / 2.0;
}

}  // namespace pivotlab::ngrams
