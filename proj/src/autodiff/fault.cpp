#include "dircn/autodiff/fault.hpp"

#include <atomic>

namespace dircn::ad::fault {
namespace {
std::atomic<bool> g_silu{false};
}

void corrupt_silu_derivative(bool enabled) { g_silu.store(enabled); }
bool silu_derivative_corrupted() { return g_silu.load(std::memory_order_relaxed); }

}  // namespace dircn::ad::fault
