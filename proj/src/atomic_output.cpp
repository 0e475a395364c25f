#include "pivotlab/atomic_output.hpp"

#include <unistd.h>

#include <atomic>
#include <string>

#include "pivotlab/error.hpp"

namespace pivotlab {

namespace {
std::atomic<unsigned> g_counter{0};
}

AtomicOutputs::~AtomicOutputs() {
  if (committed_) return;
  for (auto& s : staged_) {
    s.stream.reset();
    std::error_code ec;
    std::filesystem::remove(s.temp, ec);
  }
}

std::ostream& AtomicOutputs::open(const std::filesystem::path& target) {
  for (const auto& s : staged_)
    if (s.target == target) throw Error("output " + target.string() + " declared twice");
  auto temp = target;
  temp += ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(g_counter++);
  auto stream = std::make_unique<std::ofstream>(temp, std::ios::binary | std::ios::trunc);
  if (!*stream) throw Error("cannot open " + temp.string() + " for writing");
  staged_.push_back({target, std::move(temp), std::move(stream)});
  return *staged_.back().stream;
}

void AtomicOutputs::commit() {
  for (auto& s : staged_) {
    s.stream->flush();
    if (!*s.stream) throw Error("write to " + s.target.string() + " failed");
    s.stream->close();
  }
  for (auto& s : staged_) std::filesystem::rename(s.temp, s.target);
  committed_ = true;
}

std::vector<std::filesystem::path> AtomicOutputs::targets() const {
  std::vector<std::filesystem::path> out;
  for (const auto& s : staged_) out.push_back(s.target);
  return out;
}

}  // namespace pivotlab
