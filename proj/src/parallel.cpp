#include "progsearch/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace progsearch {

#ifdef _OPENMP
namespace {
const int kDefaultThreads = omp_get_max_threads();
}

void set_num_threads(int n) { omp_set_num_threads(n > 0 ? n : kDefaultThreads); }
int num_threads() { return omp_get_max_threads(); }
bool parallel_enabled() { return true; }
#else
void set_num_threads(int) {}
int num_threads() { return 1; }
bool parallel_enabled() { return false; }
#endif

}  // namespace progsearch
