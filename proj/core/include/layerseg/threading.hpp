#pragma once

#include <cstddef>
#include <functional>

namespace layerseg {

// Process-wide worker count for the compute kernels (CLI --threads).
void set_thread_count(int n);
int thread_count();

// Runs fn(block) for block = 0..num_blocks-1, distributing blocks over the
// configured workers. The block decomposition is fixed by the caller, so each
// output element is produced by exactly one block with a fixed internal
// order; results are bit-identical for any worker count.
void parallel_blocks(std::size_t num_blocks, const std::function<void(std::size_t)>& fn);

}  // namespace layerseg
