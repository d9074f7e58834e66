#include "hype/storage_audit.hpp"

namespace hype {

namespace {
thread_local StorageAudit* g_active = nullptr;
}

StorageAudit::StorageAudit() : prev_(g_active) { g_active = this; }

StorageAudit::~StorageAudit() { g_active = prev_; }

void StorageAudit::record(std::size_t n_values) noexcept {
  if (g_active != nullptr) {
    g_active->count_ += n_values;
  }
}

}  // namespace hype
