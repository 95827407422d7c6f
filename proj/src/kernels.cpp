#include "rscdma/kernels.hpp"

#include <atomic>

#include <omp.h>

namespace rscdma::kernels
{

namespace
{

std::atomic<int> thread_override{0};

} // namespace

void set_threads(int n)
{
    thread_override.store(n > 0 ? n : 0);
}

int threads()
{
    const int n = thread_override.load();
    return n > 0 ? n : omp_get_max_threads();
}

} // namespace rscdma::kernels
