#pragma once

#include <cstddef>
#include <functional>

namespace pdmp {

// PDMP_THREADS caps the worker count; 0 or unset means hardware concurrency.
std::size_t worker_count();
void set_worker_count(std::size_t n);  // 0 restores the environment default

// Splits [0, n) into contiguous chunks, one per worker.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t begin, std::size_t end,
                                           std::size_t worker)>& body);

}  // namespace pdmp
