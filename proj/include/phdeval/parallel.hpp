#pragma once

namespace phdeval {

/// Sets the number of worker threads used by the parallel kernels.
/// n <= 0 restores the runtime default.
void set_thread_count(int n);
int thread_count();

}  // namespace phdeval
