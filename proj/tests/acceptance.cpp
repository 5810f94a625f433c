// Acceptance gate: one PASS/FAIL line per criterion.
// Usage: acceptance [--criterion N]   (all criteria when N is omitted)

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "todalab/diagnostics.hpp"
#include "todalab/experiments.hpp"

using namespace todalab;

namespace {

// Pinned tolerances.
constexpr double kKappaTol = 1e-12;
constexpr double kWaveError = 1e-4;
constexpr double kOrderLo = 3.0, kOrderHi = 5.0;  // 4 +/- 25%
constexpr double kEnergyDrift = 1e-8;
constexpr double kPairingTol = 1e-8;
constexpr double kDHdcRel = 1e-6;
constexpr double kIdempotent = 1e-8;
constexpr double kLinearRate = 0.3;
constexpr double kLinearR2 = 0.9;
constexpr double kNeutralRate = 0.02;
constexpr double kResidual = 1e-9;
constexpr double kScaleFactor = 3.0;
constexpr double kSettling = 0.1;
constexpr double kTailRatio = 0.5;
constexpr double kV2R2 = 0.9;
constexpr double kVirialStep = 1e-10;
constexpr double kSlope = 2.0, kSlopeTol = 0.15;
constexpr double kFdRelative = 0.05;
constexpr double kTDoubling = 0.05;
constexpr double kProfileResidual = 1e-9;
constexpr double kProfileSymmetry = 1e-9;
constexpr double kFpuRelax = 2.0;
constexpr double kElastic = 1e-3;

class Verdict {
public:
    void item(const std::string& name, double value, const std::string& bound, bool ok) {
        std::ostringstream os;
        os.precision(4);
        os << name << '=' << value << " (" << bound << (ok ? ")" : ", violated)");
        items_.push_back(os.str());
        pass_ = pass_ && ok;
    }
    void fail(const std::string& why) {
        items_.push_back(why);
        pass_ = false;
    }
    [[nodiscard]] bool pass() const { return pass_; }
    [[nodiscard]] std::string text() const {
        std::string s;
        for (const auto& i : items_) s += (s.empty() ? "" : "; ") + i;
        return s;
    }

private:
    bool pass_ = true;
    std::vector<std::string> items_;
};

std::string le(double b) {
    std::ostringstream os;
    os << "<= " << b;
    return os.str();
}
std::string ge(double b) {
    std::ostringstream os;
    os << ">= " << b;
    return os.str();
}

LatticeField random_localized(const LatticeGrid& g, unsigned seed, long lo, long hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    LatticeField f(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.site(i) < lo || g.site(i) > hi) continue;
        f.r()[i] = U(rng);
        f.p()[i] = U(rng);
    }
    return f;
}

RunReport run_preset(const std::string& name, const std::vector<std::string>& sets) {
    return run_scenario(Scenario::from_json(apply_overrides(preset(name).to_json(), sets)));
}

bool usable(const RunReport& r, Verdict& v) {
    if (!r.ok) v.fail(r.scenario_id + " failed in " + r.failed_stage + ": " + r.cause);
    return r.ok;
}

double m(const RunReport& r, const char* key) {
    const auto it = r.metrics.find(key);
    return it == r.metrics.end() ? std::nan("") : it->second;
}

double spread(double a, double b) { return std::max(a, b) / std::min(a, b); }

std::string amp(double eps) {
    std::ostringstream os;
    os << "perturbation.amplitude=" << eps;
    return os.str();
}

Verdict criterion1() {
    Verdict v;
    double worst = 0.0;
    for (int i = 1; i <= 100; ++i) {
        const double c = 1.0 + 9.0 * i / 100.0;
        const double k = solve_kappa(c);
        worst = std::max(worst, std::abs(std::sinh(k) / k - c));
    }
    v.item("max|sinh(k)/k-c|", worst, le(kKappaTol), worst <= kKappaTol);
    const double e1 = std::abs(solve_kappa(std::sinh(1.0)) - 1.0);
    const double e2 = std::abs(solve_kappa(std::sinh(2.0) / 2.0) - 2.0);
    v.item("|k(sinh 1)-1|", e1, le(kKappaTol), e1 <= kKappaTol);
    v.item("|k(sinh 2/2)-2|", e2, le(kKappaTol), e2 <= kKappaTol);
    return v;
}

Verdict criterion2() {
    Verdict v;
    const TodaFamily fam;
    const LatticeGrid g(-300, 300);
    const double c = 1.5, T = 50.0;
    const LatticeField u0 = fam.sample(g, c, 0.0);
    auto run = [&](double dt) { return evolve(u0, fam.potential(), {dt, Scheme::StormerVerlet, T, 1000000}); };
    const Trajectory a = run(0.01);
    const Trajectory b = run(0.005);
    const double ea = phase_optimized_error(a.states.back(), fam, c, c * T, 2.0).error;
    const double eb = phase_optimized_error(b.states.back(), fam, c, c * T, 2.0).error;
    v.item("phase_error", ea, le(kWaveError), ea <= kWaveError);
    v.item("halving_factor", ea / eb, "in [3, 5]", ea / eb >= kOrderLo && ea / eb <= kOrderHi);
    const double drift = std::abs(a.energies.back() - a.energies.front()) / a.energies.front();
    v.item("energy_drift", drift, le(kEnergyDrift), drift <= kEnergyDrift);
    return v;
}

Verdict criterion3() {
    Verdict v;
    const TodaFamily fam;
    const LatticeGrid g(-300, 300);
    for (double c : {1.1, 1.5, 2.0}) {
        const SolitonTangents t = fam.modes(g, c, 0.0).tangents();
        const std::string at = "@" + std::to_string(c).substr(0, 3);
        const NeutralPairing np = neutral_pairing(t);
        const double dd = std::abs(inner(t.ud, np.J_ud));
        const double cc = std::abs(np.X);
        v.item("<ud,J^-1ud>" + at, dd, le(kPairingTol), dd <= kPairingTol);
        v.item("<uc,J^-1uc>" + at, cc, le(kPairingTol), cc <= kPairingTol);

        const double h = 1e-5;
        const double fd = (hamiltonian(fam.sample(g, c + h, 0.0), fam.potential()) -
                           hamiltonian(fam.sample(g, c - h, 0.0), fam.potential())) /
                          (2 * h);
        const double rel = std::abs(inner(t.uc, np.J_ud) - fd) / std::abs(fd);
        v.item("<uc,J^-1ud>/dHdc-1" + at, rel, le(kDHdcRel), rel <= kDHdcRel);
        v.item("dHdc" + at, t.dHdc, "> 0", t.dHdc > 0.0);
    }
    const SolitonTangents t = fam.modes(g, 1.5, 0.0).tangents();
    double worst = 0.0;
    for (unsigned seed = 1; seed <= 20; ++seed) {
        const LatticeField w = random_localized(g, seed, -20, 20);
        const LatticeField Pw = project_Pc(w, t).value;
        worst = std::max(worst, (project_Pc(Pw, t).value - Pw).max_abs() / w.max_abs());
    }
    v.item("max|P(Pw)-Pw|", worst, le(kIdempotent), worst <= kIdempotent);
    return v;
}

Verdict criterion4() {
    Verdict v;
    const RunReport d = run_preset("linearized-decay", {});
    if (usable(d, v)) {
        v.item("rate", m(d, "linear_rate"), ge(kLinearRate), m(d, "linear_rate") >= kLinearRate);
        v.item("r2", m(d, "linear_r2"), ge(kLinearR2), m(d, "linear_r2") >= kLinearR2);
        v.item("bound_b", m(d, "rate_bound_b"), "reported", true);
    }
    for (const char* name : {"linearized-neutral-ud", "linearized-neutral-uc"}) {
        const RunReport n = run_preset(name, {});
        if (!usable(n, v)) continue;
        v.item(std::string("|rate|:") + name, m(n, "abs_linear_rate"), le(kNeutralRate),
               m(n, "abs_linear_rate") <= kNeutralRate);
    }
    return v;
}

Verdict criterion5() {
    Verdict v;
    const RunReport lo = run_preset("theorem1-small-bump", {amp(1e-3)});
    const RunReport hi = run_preset("theorem1-small-bump", {amp(1e-2)});
    if (!usable(lo, v) || !usable(hi, v)) return v;
    for (const RunReport* r : {&lo, &hi}) {
        const double res = m(*r, "sup_constraint_residual");
        v.item("residual(eps=" + std::to_string(r == &lo ? 1e-3 : 1e-2).substr(0, 5) + ")", res, le(kResidual),
               res <= kResidual);
    }
    const double sm = spread(m(lo, "sup_modulation_over_eps"), m(hi, "sup_modulation_over_eps"));
    v.item("sup_modulation/eps spread", sm, le(kScaleFactor), sm <= kScaleFactor);
    const double sp = spread(m(lo, "sup_energy_pin"), m(hi, "sup_energy_pin"));
    v.item("sup_energy_pin spread", sp, le(kScaleFactor), sp <= kScaleFactor);
    return v;
}

void asymptotics(const RunReport& r, double relax, Verdict& v) {
    v.item("settling", m(r, "c_settling_ratio"), le(kSettling * relax), m(r, "c_settling_ratio") <= kSettling * relax);
    v.item("tail_ratio", m(r, "tail_ratio"), le(kTailRatio * relax), m(r, "tail_ratio") <= kTailRatio * relax);
    v.item("v2_rate", m(r, "v2_decay_rate"), "> 0", m(r, "v2_decay_rate") > 0.0);
    v.item("v2_r2", m(r, "v2_decay_r2"), ge(kV2R2 / relax), m(r, "v2_decay_r2") >= kV2R2 / relax);
}

Verdict criterion6() {
    Verdict v;
    const RunReport r = run_preset("theorem1-small-bump", {amp(1e-2)});
    if (usable(r, v)) asymptotics(r, 1.0, v);
    return v;
}

Verdict criterion7() {
    Verdict v;
    for (int seed = 1; seed <= 5; ++seed) {
        const RunReport r = run_preset("virial", {"perturbation.seed=" + std::to_string(seed)});
        if (!usable(r, v)) continue;
        const std::string s = "[seed " + std::to_string(seed) + "]";
        v.item("max_increase" + s, m(r, "virial_max_increase"), le(kVirialStep),
               m(r, "virial_max_increase") <= kVirialStep && m(r, "virial_monotone") == 1.0);
        v.item("delta" + s, m(r, "virial_delta"), "> 0", m(r, "virial_bound_holds") == 1.0 && m(r, "virial_delta") > 0.0);
    }
    const RunReport f = run_preset("virial-fast-soliton", {});
    v.item("fast_soliton_fails", f.passed() ? 0.0 : 1.0, "expected failure", !f.passed());
    return v;
}

Verdict criterion8() {
    Verdict v;
    std::vector<double> eps{1e-3, 3e-3, 1e-2}, sup;
    double fd = std::nan("");
    for (double e : eps) {
        const RunReport r = run_preset("theorem1-small-bump", {amp(e)});
        if (!usable(r, v)) return v;
        sup.push_back(m(r, "sup_cdot"));
        if (e == 1e-2) fd = m(r, "rate_fd_relative");
    }
    const double slope = loglog_slope(eps, sup);
    v.item("loglog_slope", slope, "2 +/- 0.15", std::abs(slope - kSlope) <= kSlopeTol);
    v.item("fd_relative", fd, le(kFdRelative), fd <= kFdRelative);
    return v;
}

Verdict criterion9() {
    Verdict v;
    const RunReport lo = run_preset("theorem1-small-bump", {amp(1e-3)});
    const RunReport hi = run_preset("theorem1-small-bump", {amp(1e-2)});
    if (!usable(lo, v) || !usable(hi, v)) return v;
    const double s = spread(m(lo, "v2_integral"), m(hi, "v2_integral"));
    v.item("v2_integral spread", s, le(kScaleFactor), s <= kScaleFactor);
    const double d = std::abs(m(hi, "v2_integral") / m(hi, "v2_integral_half") - 1.0);
    v.item("T doubling change", d, le(kTDoubling), d <= kTDoubling);
    return v;
}

Verdict criterion10() {
    Verdict v;
    const auto V = PotentialModel::fpu(1.0, 1.0, 0.0);
    const FpuSoliton s = solve_fpu_profile(V, 1.02, 200.0, 800);
    v.item("profile_residual", s.residual, le(kProfileResidual), s.residual <= kProfileResidual);
    double asym = 0.0;
    for (std::size_t j = 1; j < s.points(); ++j) asym = std::max(asym, std::abs(s.r[j] - s.r[s.points() - j]));
    v.item("asymmetry", asym, le(kProfileSymmetry), asym <= kProfileSymmetry);
    const LatticeGrid g(-150, 150);
    for (double c : {1.01, 1.03, 1.05}) {
        const double d = fpu_tangents(solve_fpu_profile(V, c, 200.0, 800), g, 0.0).dHdc;
        v.item("dHdc@" + std::to_string(c).substr(0, 4), d, "> 0", d > 0.0);
    }

    const RunReport lo = run_preset("fpu-small-bump", {amp(3e-4)});
    const RunReport hi = run_preset("fpu-small-bump", {amp(1e-3)});
    if (!usable(lo, v) || !usable(hi, v)) return v;
    for (const RunReport* r : {&lo, &hi}) {
        const double res = m(*r, "sup_constraint_residual");
        v.item("residual", res, le(kResidual * kFpuRelax), res <= kResidual * kFpuRelax);
    }
    const double sm = spread(m(lo, "sup_modulation_over_eps"), m(hi, "sup_modulation_over_eps"));
    v.item("sup_modulation/eps spread", sm, le(kScaleFactor * kFpuRelax), sm <= kScaleFactor * kFpuRelax);
    const double sp = spread(m(lo, "sup_energy_pin"), m(hi, "sup_energy_pin"));
    v.item("sup_energy_pin spread", sp, le(kScaleFactor * kFpuRelax), sp <= kScaleFactor * kFpuRelax);
    asymptotics(hi, kFpuRelax, v);
    return v;
}

Verdict criterion11() {
    Verdict v;
    const RunReport r = run_preset("two-soliton", {});
    if (usable(r, v)) v.item("|c_after-c_before|", m(r, "elastic_deviation"), le(kElastic), m(r, "elastic_deviation") <= kElastic);
    return v;
}

const std::vector<std::function<Verdict()>> kCriteria{criterion1, criterion2, criterion3, criterion4,
                                                      criterion5, criterion6, criterion7, criterion8,
                                                      criterion9, criterion10, criterion11};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> which;
    if (argc == 3 && std::strcmp(argv[1], "--criterion") == 0) {
        const int n = std::atoi(argv[2]);
        if (n < 1 || n > static_cast<int>(kCriteria.size())) {
            std::fprintf(stderr, "criterion must be in 1..%zu\n", kCriteria.size());
            return 2;
        }
        which.push_back(n);
    } else if (argc == 1) {
        for (int n = 1; n <= static_cast<int>(kCriteria.size()); ++n) which.push_back(n);
    } else {
        std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
        return 2;
    }

    bool all = true;
    for (int n : which) {
        Verdict v;
        try {
            v = kCriteria[static_cast<std::size_t>(n - 1)]();
        } catch (const std::exception& e) {
            v.fail(std::string("error: ") + e.what());
        }
        std::printf("criterion %d: %s  %s\n", n, v.pass() ? "PASS" : "FAIL", v.text().c_str());
        std::fflush(stdout);
        all = all && v.pass();
    }
    return all ? 0 : 1;
}
