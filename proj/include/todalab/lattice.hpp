#pragma once

// Finite-window lattice fields u(n) = (r(n), p(n)), interaction potentials,
// the Hamiltonian, the symplectic operator J and its prefix-sum inverse, and
// the exponentially weighted norms used throughout the lab.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace todalab {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Boundary { ZeroPadding, Periodic };

struct LatticeGrid {
    long n_min = -100;
    long n_max = 100;
    Boundary boundary = Boundary::ZeroPadding;

    LatticeGrid() = default;
    LatticeGrid(long lo, long hi, Boundary b = Boundary::ZeroPadding);

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(n_max - n_min + 1); }
    [[nodiscard]] long site(std::size_t i) const { return n_min + static_cast<long>(i); }
    [[nodiscard]] bool contains(long n) const { return n >= n_min && n <= n_max; }

    friend bool operator==(const LatticeGrid&, const LatticeGrid&) = default;
};

/// Paired sequences (r, p) on a grid. r is the relative displacement
/// q(n+1) - q(n), p the velocity.
class LatticeField {
public:
    LatticeField() = default;
    explicit LatticeField(LatticeGrid grid);
    LatticeField(LatticeGrid grid, std::vector<double> r, std::vector<double> p);

    [[nodiscard]] const LatticeGrid& grid() const { return grid_; }
    [[nodiscard]] std::size_t size() const { return r_.size(); }

    [[nodiscard]] const std::vector<double>& r() const { return r_; }
    [[nodiscard]] const std::vector<double>& p() const { return p_; }
    std::vector<double>& r() { return r_; }
    std::vector<double>& p() { return p_; }

    // Site-indexed access; out-of-window sites read as zero (or wrap when periodic).
    [[nodiscard]] double r_at(long n) const;
    [[nodiscard]] double p_at(long n) const;

    [[nodiscard]] bool all_finite() const;
    [[nodiscard]] double max_abs() const;

    LatticeField& operator+=(const LatticeField& o);
    LatticeField& operator-=(const LatticeField& o);
    LatticeField& operator*=(double s);
    /// this += s * o
    LatticeField& axpy(double s, const LatticeField& o);

    friend LatticeField operator+(LatticeField a, const LatticeField& b) { return a += b; }
    friend LatticeField operator-(LatticeField a, const LatticeField& b) { return a -= b; }
    friend LatticeField operator*(double s, LatticeField a) { return a *= s; }
    friend LatticeField operator*(LatticeField a, double s) { return a *= s; }

private:
    [[nodiscard]] double at(const std::vector<double>& v, long n) const;

    LatticeGrid grid_;
    std::vector<double> r_;
    std::vector<double> p_;
};

/// Field with a unit entry in r (or p) at site n.
LatticeField delta_r(const LatticeGrid& g, long n, double value = 1.0);
LatticeField delta_p(const LatticeGrid& g, long n, double value = 1.0);

enum class PotentialKind { Toda, FPUPolynomial };

/// V(r) = e^{-r} - 1 + r (Toda) or k2 r^2/2 + k3 r^3 + k4 r^4 (FPU).
struct PotentialModel {
    PotentialKind kind = PotentialKind::Toda;
    double k2 = 1.0;
    double k3 = 0.0;
    double k4 = 0.0;

    static PotentialModel toda() { return {}; }
    static PotentialModel fpu(double k2, double k3, double k4 = 0.0);

    [[nodiscard]] double value(double r) const;
    [[nodiscard]] double d1(double r) const;
    [[nodiscard]] double d2(double r) const;
    [[nodiscard]] std::string describe() const;
};

double hamiltonian(const LatticeField& u, const PotentialModel& V);
LatticeField grad_hamiltonian(const LatticeField& u, const PotentialModel& V);

/// (e^∂ - 1) w2 in the first slot, (1 - e^{-∂}) w1 in the second.
LatticeField apply_J(const LatticeField& w);

struct JInverseResult {
    LatticeField value;
    bool truncation_warning = false;
};

/// Left-to-right compensated prefix sums:
///   first  component n -> sum_{m <= n}     w2(m)
///   second component n -> sum_{m <= n - 1} w1(m)
/// Warns when w is not negligible at the left edge, where the sums are cut.
JInverseResult apply_J_inverse(const LatticeField& w);

double inner(const LatticeField& u, const LatticeField& w);
double l2_norm(const LatticeField& u);

enum class NormKind { L2a, W, X };

struct WeightSpec {
    double a = 0.5;
    std::function<double(double)> center = [](double) { return 0.0; };
    double kappa = 0.0;  // only used by the W-norm; 0 means unset

    static WeightSpec fixed_center(double a, double x, double kappa = 0.0);
};

/// l2a: (sum e^{2an} |u(n)|^2)^{1/2}
/// X:   e^{-a x(t)} * l2a, evaluated as (sum e^{2a(n - x(t))} |u(n)|^2)^{1/2}
/// W:   (sum e^{-kappa |n - x(t)|} |u(n)|^2)^{1/2}
double weighted_norm(const LatticeField& u, const WeightSpec& spec, NormKind kind, double t);

/// Displacements with gauge q(n_min) = 0; one more entry than the field.
std::vector<double> reconstruct_q(const LatticeField& u);

void write_field_csv(std::ostream& os, const LatticeField& u);
LatticeField read_field_csv(std::istream& is, Boundary boundary = Boundary::ZeroPadding);

}  // namespace todalab
