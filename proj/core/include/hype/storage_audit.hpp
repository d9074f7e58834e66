#pragma once

#include <cstddef>

namespace hype {

/// Counts positional-encoding values materialized while the audit is alive.
/// The encoding builders report every bias/eta matrix they allocate to the
/// innermost active audit on the current thread; with no audit installed,
/// recording is a no-op. Used by the benchmark harness to verify the
/// 4nLh-vs-L^2 storage accounting with real allocation counts.
class StorageAudit {
 public:
  StorageAudit();
  ~StorageAudit();
  StorageAudit(const StorageAudit&) = delete;
  StorageAudit& operator=(const StorageAudit&) = delete;

  std::size_t values() const noexcept { return count_; }

  static void record(std::size_t n_values) noexcept;

 private:
  std::size_t count_ = 0;
  StorageAudit* prev_ = nullptr;
};

}  // namespace hype
