#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <vector>

namespace rscdma::kernels
{

/// Holds the first exception thrown inside a parallel region so it can be
/// rethrown on the calling thread (exceptions must not cross OpenMP regions).
class ErrorSlot
{
public:
    template <class F>
    void run(F &&f) noexcept
    {
        try
        {
            f();
        }
        catch (...)
        {
            std::lock_guard lock(m_);
            if (!e_)
                e_ = std::current_exception();
        }
    }
    void rethrow() const
    {
        if (e_)
            std::rethrow_exception(e_);
    }

private:
    std::mutex m_;
    std::exception_ptr e_;
};

/// Number of items folded into one partial sum. Fixed, so the summation
/// tree (and therefore every rounding) is independent of the thread count.
inline constexpr std::size_t kChunk = 32;

/// Threads used by the parallel kernels; 0 restores the OpenMP default.
void set_threads(int n);
int threads();

/// Sum of term(i, acc) contributions over i in [0, n). `term` adds item i
/// into `acc` (which starts as a copy of `zero`).
///
/// Partial sums over fixed-size chunks are computed in parallel and then
/// combined serially in chunk order: bit-identical for any thread count.
template <class T, class Term>
T parallel_reduce(std::size_t n, const T &zero, Term &&term)
{
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<T> partial(chunks, zero);
    const auto nc = static_cast<long long>(chunks);
    ErrorSlot err;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads())
    for (long long c = 0; c < nc; ++c)
    {
        err.run([&] {
            const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
            const std::size_t hi = std::min(n, lo + kChunk);
            T &acc = partial[static_cast<std::size_t>(c)];
            for (std::size_t i = lo; i < hi; ++i)
                term(i, acc);
        });
    }
    err.rethrow();
    T total = zero;
    for (const T &p : partial)
        total += p;
    return total;
}

/// Reference implementation: the same chunked summation tree evaluated on
/// the calling thread, so it matches parallel_reduce bit for bit.
template <class T, class Term>
T serial_reduce(std::size_t n, const T &zero, Term &&term)
{
    T total = zero;
    for (std::size_t lo = 0; lo < n; lo += kChunk)
    {
        T acc = zero;
        for (std::size_t i = lo; i < std::min(n, lo + kChunk); ++i)
            term(i, acc);
        total += acc;
    }
    return total;
}

template <class T, class Term>
T reduce(bool parallel, std::size_t n, const T &zero, Term &&term)
{
    return parallel ? parallel_reduce(n, zero, term) : serial_reduce(n, zero, term);
}

/// Independent tasks f(i); results must be written to per-index slots.
template <class F>
void parallel_for(std::size_t n, F &&f)
{
    const auto nn = static_cast<long long>(n);
    ErrorSlot err;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads())
    for (long long i = 0; i < nn; ++i)
        err.run([&] { f(static_cast<std::size_t>(i)); });
    err.rethrow();
}

/// Accumulator of a fixed number of real sums, usable with the reducers.
struct SumVec
{
    std::vector<double> v;

    explicit SumVec(std::size_t n = 0) : v(n, 0.0) {}
    SumVec &operator+=(const SumVec &o)
    {
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] += o.v[i];
        return *this;
    }
    double &operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
};

} // namespace rscdma::kernels
