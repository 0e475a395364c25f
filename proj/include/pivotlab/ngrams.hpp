#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "pivotlab/datamodel.hpp"

namespace pivotlab::ngrams {

// Counts every contiguous window of `n` bytes (1 <= n <= 4). Throws
// ArgumentError when the content is shorter than `n`.
NgramHistogram extract(std::string_view content, int n = 4);

// Derives a k-gram histogram from an n-gram histogram by summing over grams
// that share the same k-byte prefix. The result equals direct extraction
// except for the last n-k windows of the file, which have no n-gram to
// start them.
NgramHistogram marginalize_prefix(const NgramHistogram& hist, int k);

// Adds `other` into `into`. Both must have the same gram length.
void merge_into(NgramHistogram& into, const NgramHistogram& other);

// Extracts one histogram per input in parallel. Output order follows input.
std::vector<NgramHistogram> extract_all(std::span<const std::string_view> contents, int n,
                                        unsigned workers);

double median_total(std::span<const NgramHistogram> hists);

}  // namespace pivotlab::ngrams
