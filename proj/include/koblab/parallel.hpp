#ifndef KOBLAB_PARALLEL_HPP
#define KOBLAB_PARALLEL_HPP

#include <functional>

namespace koblab {

// Worker cap for sample sweeps (CLI --threads). 0 means hardware default.
void set_thread_cap(int threads);
int thread_cap();

// Runs fn(i) for i in [0, count). Each item writes only to its own output
// slot, so reductions performed afterwards in index order are independent
// of the thread count. Exceptions propagate (first one wins).
void parallel_for(int count, const std::function<void(int)>& fn);

} // namespace koblab

#endif
