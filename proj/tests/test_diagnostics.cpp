#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>

#include "todalab/diagnostics.hpp"

using namespace todalab;

namespace {

LatticeField localized(const LatticeGrid& g, unsigned seed, long lo, long hi, double norm) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    LatticeField f(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.site(i) < lo || g.site(i) > hi) continue;
        f.r()[i] = U(rng);
        f.p()[i] = U(rng);
    }
    f *= norm / l2_norm(f);
    return f;
}

}  // namespace

TEST_CASE("virial weights") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> X(-50.0, 50.0);
    for (double a : {0.05, 0.1, 0.2}) {
        const VirialSpec s{a, 1.3, 1.2};
        for (int i = 0; i < 200; ++i) {
            const double t = 10.0, x = X(rng);
            const double z = a * (x - s.center(t));
            CHECK(s.psi(t, x) > 0.0);
            CHECK(s.psi(t, x) < 2.0);
            CHECK(s.psi(t, x) == doctest::Approx(1.0 + std::tanh(z)).epsilon(1e-12));
            const double sech = 1.0 / std::cosh(z);
            CHECK(s.psi_tilde_sq(t, x) == doctest::Approx(a * sech * sech).epsilon(1e-12));
            const double h = 1e-5;
            CHECK(s.psi_tilde_sq(t, x) == doctest::Approx((s.psi(t, x + h) - s.psi(t, x - h)) / (2 * h)).epsilon(1e-6));
        }
    }
    SUBCASE("discrete difference ratio is O(a)") {
        const VirialSpec s{0.1, 0.3, 1.2};
        double worst = 0.0;
        for (long n = -100; n <= 100; ++n) {
            const double dn = static_cast<double>(n);
            worst = std::max(worst, std::abs((s.psi(0.0, dn) - s.psi(0.0, dn - 1)) / s.psi_tilde_sq(0.0, dn) - 1.0));
        }
        CHECK(worst <= 0.2);
    }
    CHECK_THROWS_AS((VirialSpec{0.1, 0.0, 1.0}).validate(1.0), Error);
    CHECK_THROWS_AS((VirialSpec{0.0, 0.0, 1.2}).validate(1.0), Error);
    CHECK_NOTHROW((VirialSpec{0.1, 0.0, 1.2}).validate(1.0));
}

TEST_CASE("virial functionals") {
    const LatticeGrid g(-400, 400);
    const auto V = PotentialModel::toda();
    const VirialSpec s{0.1, 0.0, 1.2};
    CHECK(virial_energy(LatticeField(g), V, s, 0.0) == 0.0);
    CHECK(virial_dissipation(LatticeField(g), s, 0.0) == 0.0);

    const LatticeField right = localized(g, 1, 300, 310, 1e-2);
    CHECK(std::abs(virial_energy(right, V, s, 0.0) - 2 * hamiltonian(right, V)) <= 1e-10 * hamiltonian(right, V));
    const LatticeField left = localized(g, 2, -310, -300, 1e-2);
    CHECK(virial_energy(left, V, s, 0.0) <= std::exp(-2 * 0.1 * 300.0) * 2 * hamiltonian(left, V));

    LatticeField delta(g);
    const std::size_t i0 = static_cast<std::size_t>(-g.n_min);
    delta.r()[i0] = 0.3;
    delta.p()[i0] = -0.4;
    CHECK(virial_dissipation(delta, s, 0.0) == doctest::Approx(0.1 * 0.25).epsilon(1e-14));

    const LatticeField v = localized(g, 3, -20, 20, 1.0);
    const LatticeField w = localized(g, 3, -13, 27, 1.0);
    const VirialSpec shifted{0.1, 7.0, 1.2};
    CHECK(virial_dissipation(w, shifted, 0.0) == doctest::Approx(virial_dissipation(v, s, 0.0)).epsilon(1e-13));
}

TEST_CASE("virial monotonicity") {
    const LatticeGrid g(-200, 400);
    const auto V = PotentialModel::toda();
    const IntegratorConfig cfg{0.01, Scheme::RK4, 100.0, 10};

    SUBCASE("zero data") {
        const auto rep = monotonicity_check(evolve(LatticeField(g), V, cfg), V, {0.1, 0.0, 1.2});
        CHECK(rep.pass());
        CHECK_FALSE(rep.delta.has_value());
    }
    SUBCASE("small localized data") {
        for (unsigned seed = 1; seed <= 5; ++seed) {
            const Trajectory tr = evolve(localized(g, seed, -10, 10, 1e-2), V, cfg);
            for (double slope : {1.2, 1.5}) {
                for (double a : {0.05, 0.1}) {
                    const auto rep = monotonicity_check(tr, V, {a, 0.0, slope});
                    CHECK(rep.monotone);
                    CHECK(rep.bound_holds);
                    REQUIRE(rep.delta.has_value());
                    CHECK(*rep.delta > 0.0);
                    CHECK_FALSE(rep.first_violation_t.has_value());
                }
            }
        }
    }
    SUBCASE("a faster soliton outruns the line") {
        const LatticeField u = sample_toda(TodaSoliton::with_speed(1.5), g, 0.0);
        const auto rep = monotonicity_check(evolve(u, V, cfg), V, {0.1, 0.0, 1.2});
        CHECK_FALSE(rep.pass());
        CHECK(rep.first_violation_t.has_value());
    }
}

TEST_CASE("tail norm") {
    const TodaFamily fam;
    const LatticeGrid g(-300, 300);
    const LatticeField u = fam.sample(g, 1.5, 150.0);
    CHECK(tail_norm(u, 1.2, 100.0, TailReference{&fam, 1.5, 150.0}) == 0.0);

    const LatticeField bump = localized(g, 4, -40, 0, 1e-2);
    CHECK(tail_norm(u + bump, 1.2, 100.0, TailReference{&fam, 1.5, 150.0}) <= 1e-15);
    CHECK(tail_norm(localized(g, 4, 0, 40, 1e-2), 0.0, 0.0) == doctest::Approx(1e-2).epsilon(1e-12));
    CHECK(tail_norm(bump, 1.2, 100.0) == 0.0);
    CHECK_THROWS_AS(tail_norm(u, 1.2, 300.0), Error);
}

TEST_CASE("decay fits") {
    std::vector<double> t, e, one, wob;
    for (int k = 0; k <= 100; ++k) {
        t.push_back(0.5 * k);
        e.push_back(std::exp(-0.5 * t.back()));
        one.push_back(3.0);
        wob.push_back(e.back() * (1.0 + 0.01 * std::sin(t.back())));
    }
    const DecayFit f = fit_decay(t, e, 0.0, 50.0);
    CHECK(std::abs(f.rate - 0.5) <= 1e-10);
    CHECK(f.r_squared == doctest::Approx(1.0));
    CHECK(f.samples == 101);
    CHECK(std::abs(fit_decay(t, one, 0.0, 50.0).rate) <= 1e-14);
    CHECK(std::abs(fit_decay(t, wob, 0.0, 50.0).rate - 0.5) <= 0.01);

    CHECK_THROWS_AS(fit_decay(t, e, 10.0, 10.0), Error);
    CHECK_THROWS_AS(fit_decay(t, e, 10.0, 12.0), Error);
    auto bad = e;
    bad[10] = 0.0;
    CHECK_THROWS_AS(fit_decay(t, bad, 0.0, 50.0), Error);

    CHECK(loglog_slope({1e-3, 3e-3, 1e-2}, {3e-6, 2.7e-5, 3e-4}) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), Error);
    CHECK_THROWS_AS(loglog_slope({1.0, -1.0}, {1.0, 2.0}), Error);
}

TEST_CASE("v2 integral") {
    ModulationTrack tr;
    CHECK(v2_integral_bound(tr) == 0.0);
    tr.v0_norm = 0.5;
    for (int k = 0; k <= 10; ++k) {
        TrackSample s;
        s.t = k;
        s.norm_v2_X = 1.0;
        tr.samples.push_back(s);
    }
    CHECK(v2_integral_bound(tr) == doctest::Approx(40.0));
    tr.v0_norm = 0.0;
    CHECK(v2_integral_bound(tr) == 0.0);
}

TEST_CASE("phase-optimized error") {
    const TodaFamily fam;
    const LatticeGrid g(-100, 100);
    const LatticeField u = fam.sample(g, 1.5, 0.37);
    const PhaseFit p = phase_optimized_error(u, fam, 1.5, 0.2);
    CHECK(p.phase == doctest::Approx(0.37).epsilon(1e-6));
    CHECK(p.error <= 1e-7);
}

TEST_CASE("series csv") {
    const std::vector<double> a{1.0, 2.0}, b{3.0, 4.0}, c{1.0};
    std::stringstream ss;
    write_series_csv(ss, {"t", "m"}, {&a, &b});
    std::string line;
    std::getline(ss, line);
    CHECK(line == "t,m");
    std::getline(ss, line);
    CHECK(line == "1,3");
    CHECK_THROWS_AS(write_series_csv(ss, {"t", "m"}, {&a, &c}), Error);
    CHECK_THROWS_AS(write_series_csv(ss, {"t"}, {&a, &b}), Error);
}
