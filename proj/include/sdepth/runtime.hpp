#pragma once

namespace sdepth {

/// Keeps glibc from returning large temporaries to the kernel after every
/// free. The batched passes allocate many N x B blocks per layer, and the
/// default mmap/trim thresholds turn each of them into fresh page faults
/// (about 2.5x slower backward passes). No-op on other C libraries.
/// Call once at program start.
void tune_allocator();

}  // namespace sdepth
