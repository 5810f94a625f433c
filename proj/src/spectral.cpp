#include "spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

namespace todalab::detail {

namespace {
// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

struct RealFft::Plans {
    double* real = nullptr;
    fftw_complex* spec = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
};

RealFft::RealFft(std::size_t n, double period) : n_(n), k_(n / 2 + 1), plans_(std::make_unique<Plans>()) {
    for (std::size_t j = 0; j < k_.size(); ++j) k_[j] = 2.0 * std::numbers::pi * static_cast<double>(j) / period;
    std::lock_guard lock(planner_mutex());
    plans_->real = fftw_alloc_real(n);
    plans_->spec = fftw_alloc_complex(n / 2 + 1);
    const int ni = static_cast<int>(n);
    plans_->fwd = fftw_plan_dft_r2c_1d(ni, plans_->real, plans_->spec, FFTW_ESTIMATE);
    plans_->inv = fftw_plan_dft_c2r_1d(ni, plans_->spec, plans_->real, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plans_->fwd);
    fftw_destroy_plan(plans_->inv);
    fftw_free(plans_->real);
    fftw_free(plans_->spec);
}

Spectrum RealFft::forward(const std::vector<double>& f) const {
    std::memcpy(plans_->real, f.data(), n_ * sizeof(double));
    fftw_execute(plans_->fwd);
    Spectrum s(modes());
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = {plans_->spec[j][0], plans_->spec[j][1]};
    return s;
}

std::vector<double> RealFft::inverse(Spectrum s) const {
    if (n_ % 2 == 0) s.back() = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        plans_->spec[j][0] = s[j].real();
        plans_->spec[j][1] = s[j].imag();
    }
    fftw_execute(plans_->inv);
    std::vector<double> f(plans_->real, plans_->real + n_);
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (double& x : f) x *= inv_n;
    return f;
}

Spectrum shifted(const RealFft& fft, Spectrum s, double shift) {
    for (std::size_t j = 0; j < s.size(); ++j) s[j] *= std::polar(1.0, -fft.wavenumber(j) * shift);
    return s;
}

Spectrum differentiated(const RealFft& fft, Spectrum s, int order) {
    for (std::size_t j = 0; j < s.size(); ++j) {
        const std::complex<double> ik(0.0, fft.wavenumber(j));
        std::complex<double> f(1.0, 0.0);
        for (int o = 0; o < order; ++o) f *= ik;
        s[j] *= f;
    }
    return s;
}

}  // namespace todalab::detail
