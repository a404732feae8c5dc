#ifndef SCT_PARALLEL_HPP
#define SCT_PARALLEL_HPP

namespace sct {

// Number of worker threads for data-parallel loops: hardware concurrency,
// capped by the SCT_THREADS environment variable when set. Always >= 1.
int max_threads();

}  // namespace sct

#endif
