#pragma once

#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "error.hpp"

namespace grushin::detail {

// FFTW's planner is not re-entrant; execution of an existing plan is.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};

/// In-place DFT of `howmany` contiguous arrays of shape `dims`.
/// backward: sum_k X_k e^{+2 pi i jk/N}; forward uses e^{-...}; both unnormalised.
class BatchedDft {
public:
    BatchedDft(std::vector<int> dims, int howmany) : dims_(std::move(dims)), howmany_(howmany)
    {
        std::size_t n = 1;
        for (int d : dims_) n *= static_cast<std::size_t>(d);
        size_ = n;
        std::vector<std::complex<double>> scratch(n * static_cast<std::size_t>(howmany));
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        const int rank = static_cast<int>(dims_.size());
        const int dist = static_cast<int>(n);
        fwd_.reset(fftw_plan_many_dft(rank, dims_.data(), howmany, buf, nullptr, 1, dist, buf, nullptr, 1, dist,
                                      FFTW_FORWARD, flags));
        bwd_.reset(fftw_plan_many_dft(rank, dims_.data(), howmany, buf, nullptr, 1, dist, buf, nullptr, 1, dist,
                                      FFTW_BACKWARD, flags));
        if (!fwd_ || !bwd_) throw NumericalFailure("fftw: plan creation failed");
    }

    std::size_t batch_size() const { return size_; }
    int howmany() const { return howmany_; }

    void forward(std::complex<double>* data) const
    {
        auto* p = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(fwd_.get(), p, p);
    }

    void backward(std::complex<double>* data) const
    {
        auto* p = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(bwd_.get(), p, p);
    }

private:
    std::vector<int> dims_;
    int howmany_;
    std::size_t size_ = 0;
    std::unique_ptr<fftw_plan_s, PlanDeleter> fwd_, bwd_;
};

} // namespace grushin::detail
