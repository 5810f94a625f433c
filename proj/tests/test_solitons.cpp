#include <cmath>
#include <random>

#include <doctest.h>

#include "todalab/lattice.hpp"
#include "todalab/solitons.hpp"

using namespace todalab;

namespace {

double bisect_kappa(double c) {
    double lo = 1e-8, hi = 50.0;
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (lo + hi);
        (std::sinh(m) / m < c ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
}

// x-derivatives of the closed-form wave, by hand.
struct TodaOracle {
    double c, k;
    [[nodiscard]] double dr(double x) const {
        return 2 * k * std::tanh(k * x) - k * std::tanh(k * (x + 1)) - k * std::tanh(k * (x - 1));
    }
    [[nodiscard]] double dp(double x) const {
        const double s0 = 1 / std::cosh(k * x), s1 = 1 / std::cosh(k * (x - 1));
        return c * k * k * (s0 * s0 - s1 * s1);
    }
};

double H_at(double c, const LatticeGrid& g) {
    return hamiltonian(sample_toda(TodaSoliton::with_speed(c), g, 0.0), PotentialModel::toda());
}

}  // namespace

TEST_CASE("kappa inversion") {
    CHECK(solve_kappa(std::sinh(1.0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(solve_kappa(std::sinh(2.0) / 2.0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(solve_kappa(1.5) == doctest::Approx(bisect_kappa(1.5)).epsilon(1e-12));
    CHECK(solve_kappa(1.5) == doctest::Approx(1.62).epsilon(0.01));
    for (int i = 1; i <= 100; ++i) {
        const double c = std::exp(std::log(10.0) * i / 100.0);
        const double k = solve_kappa(c);
        CHECK(k > 0.0);
        CHECK(std::abs(std::sinh(k) / k - c) <= 1e-12);
    }
    CHECK_THROWS_AS(solve_kappa(1.0), Error);
    CHECK_THROWS_AS(solve_kappa(0.5), Error);
}

TEST_CASE("toda profile") {
    const TodaSoliton s = TodaSoliton::with_speed(1.5);
    const double k = s.kappa;
    CHECK(toda_profile(s, -50 / k).q == doctest::Approx(k).epsilon(1e-12));
    CHECK(toda_profile(s, 50 / k).q == doctest::Approx(-k).epsilon(1e-12));
    CHECK(toda_profile(s, 0.0).r == doctest::Approx(-2 * std::log(std::cosh(k))).epsilon(1e-13));
    for (double x = -30.0; x <= 30.0; x += 0.37) {
        const auto pt = toda_profile(s, x);
        CHECK(pt.p > 0.0);
        CHECK(pt.r < 0.0);
    }
}

TEST_CASE("sampled toda soliton") {
    const double c = 1.5;
    const TodaSoliton s = TodaSoliton::with_speed(c);
    const LatticeGrid g(-300, 300);

    SUBCASE("travelling-wave residual") {
        const LatticeField u = sample_toda(s, g, 0.3);
        const LatticeField rhs = apply_J(grad_hamiltonian(u, PotentialModel::toda()));
        const TodaOracle o{c, s.kappa};
        double err = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = static_cast<double>(g.site(i)) - 0.3;
            err = std::max(err, std::abs(rhs.r()[i] + c * o.dr(x)));
            err = std::max(err, std::abs(rhs.p()[i] + c * o.dp(x)));
        }
        CHECK(err <= 1e-10);
    }
    SUBCASE("integer phase shift is an index shift") {
        const LatticeField a = sample_toda(s, g, 0.25);
        const LatticeField b = sample_toda(s, g, 7.25);
        for (long n = -250; n <= 250; ++n) {
            CHECK(b.r_at(n + 7) == doctest::Approx(a.r_at(n)).epsilon(1e-13));
            CHECK(b.p_at(n + 7) == doctest::Approx(a.p_at(n)).epsilon(1e-13));
        }
    }
    SUBCASE("phase invariants") {
        // l2 is invariant under integer shifts only; the energy under every shift.
        const LatticeField u0 = sample_toda(s, g, 0.3);
        for (double k : {1.0, 13.0, -40.0}) CHECK(std::abs(l2_norm(sample_toda(s, g, 0.3 + k)) - l2_norm(u0)) <= 1e-12);
        const auto V = PotentialModel::toda();
        const double H0 = hamiltonian(u0, V);
        for (double x0 : {0.1, 0.5, 13.77, -40.2}) CHECK(std::abs(hamiltonian(sample_toda(s, g, x0), V) - H0) <= 1e-12 * H0);
    }
    SUBCASE("tail decay rate") {
        const LatticeField u = sample_toda(s, g, 0.0);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int m = 0;
        for (long n = 6; n <= 14; ++n) {
            const double y = std::log(std::abs(u.r_at(n)));
            sx += n;
            sy += y;
            sxx += static_cast<double>(n * n);
            sxy += n * y;
            ++m;
        }
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        CHECK(-slope == doctest::Approx(2 * s.kappa).epsilon(0.05));
    }
}

TEST_CASE("toda tangents") {
    const LatticeGrid g(-200, 200);
    for (double c : {1.1, 1.5, 2.0}) {
        const TodaSoliton s = TodaSoliton::with_speed(c);
        const SolitonTangents t = toda_tangents(s, g, 0.0);
        CHECK(t.dHdc > 0.0);
        CHECK(t.theta * t.dHdc == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(std::abs(inner(t.ud, apply_J_inverse(t.ud).value)) <= 1e-10);

        const double h = 1e-5;
        const double fd = (H_at(c + h, g) - H_at(c - h, g)) / (2 * h);
        CHECK(t.dHdc == doctest::Approx(fd).epsilon(1e-6));
        CHECK(inner(t.uc, apply_J_inverse(t.ud).value) == doctest::Approx(fd).epsilon(1e-6));
    }
    SUBCASE("energy vanishes toward the sound speed") {
        const LatticeGrid w(-600, 600);
        double prev = H_at(1.5, w);
        for (int k = 2; k <= 8; ++k) {
            const double H = H_at(1.0 + std::ldexp(1.0, -k), w);
            CHECK(H < prev);
            prev = H;
        }
        CHECK(prev < 1e-2);
    }
}

TEST_CASE("fpu sound speed") {
    CHECK(fpu_sound_speed(PotentialModel::fpu(1.0, 1.0)) == 1.0);
    CHECK(fpu_sound_speed(PotentialModel::fpu(4.0, 1.0)) == 2.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.1, 5.0);
    for (int i = 0; i < 5; ++i) {
        const auto V = PotentialModel::fpu(U(rng), U(rng), U(rng));
        const double h = 1e-4;
        const double d2 = (V.value(h) - 2 * V.value(0.0) + V.value(-h)) / (h * h);
        CHECK(fpu_sound_speed(V) == doctest::Approx(std::sqrt(d2)).epsilon(1e-6));
    }
    CHECK_THROWS_AS(fpu_sound_speed(PotentialModel::toda()), Error);
    CHECK_THROWS_AS(PotentialModel::fpu(-1.0, 1.0), Error);
    CHECK_THROWS_AS(PotentialModel::fpu(1.0, 0.0), Error);
}

TEST_CASE("fpu profile") {
    const auto V = PotentialModel::fpu(1.0, 1.0, 0.0);
    const FpuSoliton s = solve_fpu_profile(V, 1.02, 200.0, 800);
    CHECK(s.residual <= 1e-9);
    CHECK(std::abs(s.amplitude() - std::abs(fpu_kdv_amplitude(V, 1.02))) <= 0.2 * std::abs(fpu_kdv_amplitude(V, 1.02)));

    // Even about x = 0 on the collocation grid x_j = -L/2 + j h.
    double asym = 0.0;
    const std::size_t N = s.points();
    for (std::size_t j = 1; j < N; ++j) asym = std::max(asym, std::abs(s.r[j] - s.r[N - j]));
    CHECK(asym <= 1e-9);

    // Single-signed with the extremum at the centre.
    const double peak = s.r[N / 2];
    CHECK(std::abs(peak) == doctest::Approx(s.amplitude()));
    for (double v : s.r) CHECK(v * peak >= -1e-10 * std::abs(peak) * std::abs(peak));

    CHECK_THROWS_AS(solve_fpu_profile(V, 1.0, 200.0, 800), Error);
    CHECK_THROWS_AS(solve_fpu_profile(V, 0.9, 200.0, 800), Error);

    SUBCASE("grid halving") {
        const FpuSoliton a = solve_fpu_profile(V, 1.1, 100.0, 200);
        const FpuSoliton b = solve_fpu_profile(V, 1.1, 100.0, 400);
        CHECK(fpu_midpoint_defect(b) * 10.0 <= fpu_midpoint_defect(a));
        CHECK(fpu_midpoint_defect(b) <= 1e-8);
    }
}

TEST_CASE("fpu tangents") {
    const auto V = PotentialModel::fpu(1.0, 1.0, 0.0);
    const LatticeGrid g(-150, 150);
    for (double c : {1.01, 1.03, 1.05}) {
        const FpuSoliton s = solve_fpu_profile(V, c, 200.0, 800);
        const SolitonTangents t = fpu_tangents(s, g, 0.0);
        CHECK(t.dHdc > 0.0);
        CHECK(std::abs(inner(t.ud, apply_J_inverse(t.ud).value)) <= 1e-8);

        const double h = 1e-3 * (c - 1.0);
        auto H = [&](double cc) { return hamiltonian(sample_fpu(solve_fpu_profile(V, cc, 200.0, 800), g, 0.0), V); };
        const double fd = (H(c + h) - H(c - h)) / (2 * h);
        CHECK(t.dHdc == doctest::Approx(fd).epsilon(1e-3));

        const LatticeField u = sample_fpu(s, g, 0.0);
        CHECK((t.ud - apply_J(grad_hamiltonian(u, V))).max_abs() <= 1e-7);
    }
}

TEST_CASE("fpu family interpolation") {
    const auto V = PotentialModel::fpu(1.0, 1.0, 0.0);
    const FpuFamily fam(V, 1.01, 1.03, 200.0, 4, 17);
    const LatticeGrid g(-150, 150);
    for (double c : {1.0137, 1.02, 1.0261}) {
        const LatticeField direct = sample_fpu(solve_fpu_profile(V, c, 200.0, 800), g, 2.3);
        const LatticeField interp = fam.sample(g, c, 2.3);
        CHECK((direct - interp).max_abs() <= 1e-8 * direct.max_abs());
    }
    const SolitonModes m = fam.modes(g, 1.02, 0.0);
    CHECK(m.dHdc > 0.0);
    CHECK(inner(m.uc, apply_J_inverse(m.ud).value) == doctest::Approx(m.dHdc).epsilon(1e-6));
}

TEST_CASE("toda family modes") {
    const TodaFamily fam;
    const LatticeGrid g(-200, 200);
    const double c = 1.5, x = 0.4, h = 1e-5;
    const SolitonModes m = fam.modes(g, c, x);
    // d_c at fixed phase by central differences.
    const LatticeField fd = (1.0 / (2 * h)) * (fam.sample(g, c + h, x) - fam.sample(g, c - h, x));
    CHECK((fd - m.uc).max_abs() <= 1e-8);
    const LatticeField fdx = (c / (2 * h)) * (fam.sample(g, c, x + h) - fam.sample(g, c, x - h));
    CHECK((fdx - m.ud).max_abs() <= 1e-8);
    CHECK(m.energy == doctest::Approx(H_at(c, g)).epsilon(1e-12));
}
