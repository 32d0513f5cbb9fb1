#pragma once

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>

#include <fftw3.h>

#include "error.hpp"

namespace interior_ct {

/// Planner calls into FFTW are not thread-safe; execution is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// Size-n complex transform pair with its own buffer (unnormalized, like FFTW).
class FftPlan {
  public:
    explicit FftPlan(std::size_t n) : n_(n) {
        require(n >= 1, "FftPlan: size must be positive");
        buffer_ = fftw_alloc_complex(n);
        if (!buffer_) throw std::bad_alloc();
        std::lock_guard lock(fftw_planner_mutex());
        forward_ = fftw_plan_dft_1d(static_cast<int>(n), buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_1d(static_cast<int>(n), buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;
    ~FftPlan() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
        fftw_free(buffer_);
    }

    std::size_t size() const { return n_; }

    std::span<std::complex<double>> data() {
        return {reinterpret_cast<std::complex<double>*>(buffer_), n_};
    }

    void forward() { fftw_execute(forward_); }
    /// Inverse transform including the 1/n normalization.
    void backward() {
        fftw_execute(backward_);
        const double s = 1.0 / static_cast<double>(n_);
        for (auto& z : data()) z *= s;
    }

  private:
    std::size_t n_;
    fftw_complex* buffer_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// Signed frequency index of DFT bin k for length n.
inline long signed_bin(std::size_t k, std::size_t n) {
    return k <= n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

} // namespace interior_ct
