#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <vector>

namespace pivotlab {

// Stages declared outputs in temporary files next to their targets and
// renames them into place on commit(). Anything not committed is removed
// on destruction, so a failed run never leaves a partial output behind.
class AtomicOutputs {
 public:
  AtomicOutputs() = default;
  AtomicOutputs(const AtomicOutputs&) = delete;
  AtomicOutputs& operator=(const AtomicOutputs&) = delete;
  ~AtomicOutputs();

  std::ostream& open(const std::filesystem::path& target);
  void commit();

  std::vector<std::filesystem::path> targets() const;

 private:
  struct Staged {
    std::filesystem::path target;
    std::filesystem::path temp;
    std::unique_ptr<std::ofstream> stream;
  };
  std::vector<Staged> staged_;
  bool committed_ = false;
};

}  // namespace pivotlab
