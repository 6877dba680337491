#include "phdeval/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace phdeval {

#ifdef _OPENMP
namespace {
const int kDefaultThreads = omp_get_max_threads();
}

void set_thread_count(int n) { omp_set_num_threads(n > 0 ? n : kDefaultThreads); }
int thread_count() { return omp_get_max_threads(); }
#else
void set_thread_count(int) {}
int thread_count() { return 1; }
#endif

}  // namespace phdeval
