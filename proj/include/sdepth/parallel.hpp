#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sdepth {

//! Run fn(begin, end) over contiguous chunks of [0, n) on up to `threads`
//! workers; one chunk per worker, so per-chunk scratch is allocated once.
template<class F>
void parallel_chunks(std::size_t n, unsigned threads, F&& fn)
{
    threads = std::max(1u, threads);
    if (threads == 1 || n < 2)
    {
        fn(std::size_t{0}, n);
        return;
    }
    std::size_t const workers = std::min<std::size_t>(threads, n);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
    {
        std::size_t const begin = n * w / workers;
        std::size_t const end = n * (w + 1) / workers;
        pool.emplace_back([&, begin, end] {
            try
            {
                fn(begin, end);
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure)
                {
                    failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool)
    {
        t.join();
    }
    if (failure)
    {
        std::rethrow_exception(failure);
    }
}

//! Run fn(i) for i in [0, n) on up to `threads` workers.
//!
//! Work is split into contiguous chunks. Callers write results into
//! per-index slots and reduce afterwards in index order, which keeps
//! results independent of the worker count.
template<class F>
void parallel_for(std::size_t n, unsigned threads, F&& fn)
{
    parallel_chunks(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
        {
            fn(i);
        }
    });
}

}  // namespace sdepth
