#pragma once

// Thin RAII wrapper over FFTW real transforms on a periodic grid.

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

namespace todalab::detail {

using Spectrum = std::vector<std::complex<double>>;

class RealFft {
public:
    RealFft(std::size_t n, double period);
    ~RealFft();
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    [[nodiscard]] std::size_t size() const { return n_; }
    [[nodiscard]] std::size_t modes() const { return n_ / 2 + 1; }
    /// Angular wavenumber of mode j.
    [[nodiscard]] double wavenumber(std::size_t j) const { return k_[j]; }

    [[nodiscard]] Spectrum forward(const std::vector<double>& f) const;
    /// Normalized inverse; the Nyquist mode is dropped so odd derivatives stay real.
    [[nodiscard]] std::vector<double> inverse(Spectrum s) const;

private:
    std::size_t n_;
    std::vector<double> k_;
    struct Plans;
    std::unique_ptr<Plans> plans_;
};

/// f(x - s) for every grid point, by phase rotation.
Spectrum shifted(const RealFft& fft, Spectrum s, double shift);
/// Spectral d^order/dx^order.
Spectrum differentiated(const RealFft& fft, Spectrum s, int order);

}  // namespace todalab::detail
