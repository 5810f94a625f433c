#include "todalab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace todalab {

LatticeGrid::LatticeGrid(long lo, long hi, Boundary b) : n_min(lo), n_max(hi), boundary(b) {
    if (n_max - n_min < 16) {
        throw Error("lattice grid must span at least 17 sites");
    }
}

LatticeField::LatticeField(LatticeGrid grid)
    : grid_(grid), r_(grid.size(), 0.0), p_(grid.size(), 0.0) {}

LatticeField::LatticeField(LatticeGrid grid, std::vector<double> r, std::vector<double> p)
    : grid_(grid), r_(std::move(r)), p_(std::move(p)) {
    if (r_.size() != grid_.size() || p_.size() != grid_.size()) {
        throw Error("field length does not match grid");
    }
}

double LatticeField::at(const std::vector<double>& v, long n) const {
    if (grid_.contains(n)) return v[static_cast<std::size_t>(n - grid_.n_min)];
    if (grid_.boundary == Boundary::Periodic) {
        const long len = static_cast<long>(grid_.size());
        long k = (n - grid_.n_min) % len;
        if (k < 0) k += len;
        return v[static_cast<std::size_t>(k)];
    }
    return 0.0;
}

double LatticeField::r_at(long n) const { return at(r_, n); }
double LatticeField::p_at(long n) const { return at(p_, n); }

bool LatticeField::all_finite() const {
    auto fin = [](double x) { return std::isfinite(x); };
    return std::all_of(r_.begin(), r_.end(), fin) && std::all_of(p_.begin(), p_.end(), fin);
}

double LatticeField::max_abs() const {
    double m = 0.0;
    for (std::size_t i = 0; i < r_.size(); ++i) m = std::max({m, std::abs(r_[i]), std::abs(p_[i])});
    return m;
}

namespace {
void require_same_grid(const LatticeField& a, const LatticeField& b) {
    if (!(a.grid() == b.grid())) throw Error("grid mismatch");
}
void require_finite(const LatticeField& u) {
    if (!u.all_finite()) throw Error("non-finite field");
}
}  // namespace

LatticeField& LatticeField::operator+=(const LatticeField& o) { return axpy(1.0, o); }
LatticeField& LatticeField::operator-=(const LatticeField& o) { return axpy(-1.0, o); }

LatticeField& LatticeField::operator*=(double s) {
    for (auto& x : r_) x *= s;
    for (auto& x : p_) x *= s;
    return *this;
}

LatticeField& LatticeField::axpy(double s, const LatticeField& o) {
    require_same_grid(*this, o);
    for (std::size_t i = 0; i < r_.size(); ++i) {
        r_[i] += s * o.r_[i];
        p_[i] += s * o.p_[i];
    }
    return *this;
}

LatticeField delta_r(const LatticeGrid& g, long n, double value) {
    LatticeField f(g);
    f.r()[static_cast<std::size_t>(n - g.n_min)] = value;
    return f;
}

LatticeField delta_p(const LatticeGrid& g, long n, double value) {
    LatticeField f(g);
    f.p()[static_cast<std::size_t>(n - g.n_min)] = value;
    return f;
}

PotentialModel PotentialModel::fpu(double k2, double k3, double k4) {
    if (!(k2 > 0.0)) throw Error("FPU potential needs k2 > 0");
    if (k3 == 0.0) throw Error("FPU potential needs k3 != 0");
    return {PotentialKind::FPUPolynomial, k2, k3, k4};
}

double PotentialModel::value(double r) const {
    if (kind == PotentialKind::Toda) {
        // e^{-r} - 1 + r cancels badly for small r
        if (std::abs(r) < 1e-3) {
            return r * r * (0.5 - r * (1.0 / 6.0 - r * (1.0 / 24.0 - r * (1.0 / 120.0 - r / 720.0))));
        }
        return std::expm1(-r) + r;
    }
    return 0.5 * k2 * r * r + k3 * r * r * r + k4 * r * r * r * r;
}

double PotentialModel::d1(double r) const {
    if (kind == PotentialKind::Toda) return -std::expm1(-r);
    return k2 * r + 3.0 * k3 * r * r + 4.0 * k4 * r * r * r;
}

double PotentialModel::d2(double r) const {
    if (kind == PotentialKind::Toda) return std::exp(-r);
    return k2 + 6.0 * k3 * r + 12.0 * k4 * r * r;
}

std::string PotentialModel::describe() const {
    if (kind == PotentialKind::Toda) return "toda";
    std::ostringstream os;
    os << "fpu(k2=" << k2 << ",k3=" << k3 << ",k4=" << k4 << ")";
    return os.str();
}

double hamiltonian(const LatticeField& u, const PotentialModel& V) {
    require_finite(u);
    double sum = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        sum += 0.5 * u.p()[i] * u.p()[i] + V.value(u.r()[i]);
    }
    return sum;
}

LatticeField grad_hamiltonian(const LatticeField& u, const PotentialModel& V) {
    require_finite(u);
    LatticeField g(u.grid());
    for (std::size_t i = 0; i < u.size(); ++i) {
        g.r()[i] = V.d1(u.r()[i]);
        g.p()[i] = u.p()[i];
    }
    return g;
}

LatticeField apply_J(const LatticeField& w) {
    const auto& g = w.grid();
    LatticeField out(g);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const long n = g.site(i);
        out.r()[i] = w.p_at(n + 1) - w.p()[i];
        out.p()[i] = w.r()[i] - w.r_at(n - 1);
    }
    return out;
}

JInverseResult apply_J_inverse(const LatticeField& w) {
    const std::size_t len = w.size();
    JInverseResult res{LatticeField(w.grid()), false};
    // Kahan-compensated running sums.
    double s2 = 0.0, c2 = 0.0;
    double s1 = 0.0, c1 = 0.0;
    auto kahan = [](double& s, double& c, double x) {
        const double y = x - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    };
    for (std::size_t i = 0; i < len; ++i) {
        kahan(s2, c2, w.p()[i]);
        res.value.r()[i] = s2;
        res.value.p()[i] = s1;
        kahan(s1, c1, w.r()[i]);
    }
    const double scale = w.max_abs();
    const double edge = std::max(std::abs(w.r().front()), std::abs(w.p().front()));
    res.truncation_warning = scale > 0.0 && edge > 1e-10 * scale;
    return res;
}

double inner(const LatticeField& u, const LatticeField& w) {
    require_same_grid(u, w);
    double sum = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        sum += u.r()[i] * w.r()[i] + u.p()[i] * w.p()[i];
    }
    return sum;
}

double l2_norm(const LatticeField& u) { return std::sqrt(inner(u, u)); }

WeightSpec WeightSpec::fixed_center(double a, double x, double kappa) {
    WeightSpec s;
    s.a = a;
    s.center = [x](double) { return x; };
    s.kappa = kappa;
    return s;
}

double weighted_norm(const LatticeField& u, const WeightSpec& spec, NormKind kind, double t) {
    if (!(spec.a > 0.0) && kind != NormKind::W) throw Error("weight exponent a must be positive");
    if (kind == NormKind::W && !(spec.kappa > 0.0)) throw Error("W-norm needs kappa > 0");
    const auto& g = u.grid();
    const double x = (kind == NormKind::L2a) ? 0.0 : spec.center(t);

    // log of the squared weight at site n
    auto log_weight = [&](long n) {
        const double y = static_cast<double>(n) - x;
        return kind == NormKind::W ? -spec.kappa * std::abs(y) : 2.0 * spec.a * y;
    };

    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u.r()[i] != 0.0 || u.p()[i] != 0.0) shift = std::max(shift, log_weight(g.site(i)));
    }
    if (!std::isfinite(shift)) return 0.0;

    double sum = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double m2 = u.r()[i] * u.r()[i] + u.p()[i] * u.p()[i];
        if (m2 != 0.0) sum += std::exp(log_weight(g.site(i)) - shift) * m2;
    }
    const double result = std::exp(0.5 * shift) * std::sqrt(sum);
    if (!std::isfinite(result)) throw Error("weighted norm overflow");
    return result;
}

std::vector<double> reconstruct_q(const LatticeField& u) {
    std::vector<double> q(u.size() + 1, 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) q[i + 1] = q[i] + u.r()[i];
    return q;
}

void write_field_csv(std::ostream& os, const LatticeField& u) {
    os << "n,r,p\n";
    os.precision(17);
    for (std::size_t i = 0; i < u.size(); ++i) {
        os << u.grid().site(i) << ',' << u.r()[i] << ',' << u.p()[i] << '\n';
    }
}

LatticeField read_field_csv(std::istream& is, Boundary boundary) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("n,r,p", 0) != 0) {
        throw Error("field csv: missing header n,r,p");
    }
    std::vector<long> sites;
    std::vector<double> r, p;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        long n;
        double rv, pv;
        char c1, c2;
        if (!(ls >> n >> c1 >> rv >> c2 >> pv) || c1 != ',' || c2 != ',') {
            throw Error("field csv: malformed row '" + line + "'");
        }
        if (!sites.empty() && n != sites.back() + 1) throw Error("field csv: rows not contiguous");
        sites.push_back(n);
        r.push_back(rv);
        p.push_back(pv);
    }
    if (sites.empty()) throw Error("field csv: no rows");
    LatticeGrid g(sites.front(), sites.back(), boundary);
    return LatticeField(g, std::move(r), std::move(p));
}

}  // namespace todalab
