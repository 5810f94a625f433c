#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "todalab/experiments.hpp"

namespace todalab {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config reading with key-path diagnostics

template <class T>
const char* type_name() {
    if constexpr (std::is_same_v<T, bool>) return "boolean";
    else if constexpr (std::is_integral_v<T>) return "integer";
    else if constexpr (std::is_floating_point_v<T>) return "number";
    else if constexpr (std::is_same_v<T, std::string>) return "string";
    else return "value";
}

class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw Error("config key '" + where() + "': expected object");
    }

    [[nodiscard]] std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    template <class T>
    T get(const std::string& key, T def) {
        seen_.insert(key);
        if (!has(key)) return def;
        return convert<T>(key);
    }

    template <class T>
    T required(const std::string& key) {
        seen_.insert(key);
        if (!has(key)) throw Error("config key '" + key_path(key) + "': missing");
        return convert<T>(key);
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    Reader child(const std::string& key) {
        seen_.insert(key);
        return Reader(j_.at(key), key_path(key));
    }

    /// Rejects keys that were never consumed.
    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) throw Error("config key '" + key_path(k) + "': unknown key");
        }
    }

private:
    template <class T>
    T convert(const std::string& key) const {
        const json& v = j_.at(key);
        const bool ok = std::is_same_v<T, bool>              ? v.is_boolean()
                        : std::is_integral_v<T>              ? v.is_number_integer()
                        : std::is_floating_point_v<T>        ? v.is_number()
                        : std::is_same_v<T, std::string>     ? v.is_string()
                                                             : true;
        if (!ok) throw Error("config key '" + key_path(key) + "': expected " + type_name<T>());
        if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
            if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
                throw Error("config key '" + key_path(key) + "': expected nonnegative integer");
            }
        }
        return v.get<T>();
    }

    [[nodiscard]] std::string where() const { return path_.empty() ? "<root>" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

const char* mode_name(RunMode m) {
    switch (m) {
        case RunMode::Nonlinear: return "nonlinear";
        case RunMode::Linearized: return "linearized";
        case RunMode::Virial: return "virial";
    }
    return "";
}

RunMode mode_from(const std::string& s, const std::string& key) {
    if (s == "nonlinear") return RunMode::Nonlinear;
    if (s == "linearized") return RunMode::Linearized;
    if (s == "virial") return RunMode::Virial;
    throw Error("config key '" + key + "': unknown mode '" + s + "'");
}

const char* perturbation_name(PerturbationKind k) {
    switch (k) {
        case PerturbationKind::None: return "none";
        case PerturbationKind::LocalizedBump: return "localized_bump";
        case PerturbationKind::SecondSoliton: return "second_soliton";
        case PerturbationKind::RandomLocalized: return "random_localized";
    }
    return "";
}

PerturbationKind perturbation_from(const std::string& s, const std::string& key) {
    if (s == "none") return PerturbationKind::None;
    if (s == "localized_bump") return PerturbationKind::LocalizedBump;
    if (s == "second_soliton") return PerturbationKind::SecondSoliton;
    if (s == "random_localized") return PerturbationKind::RandomLocalized;
    throw Error("config key '" + key + "': unknown perturbation kind '" + s + "'");
}

// Check name -> metric it reads and how the tolerance bounds it.
enum class Bound { AtMost, AtLeast, Above, Virial };
struct CheckDef {
    const char* metric;
    Bound bound;
};

const std::map<std::string, CheckDef>& check_catalogue() {
    static const std::map<std::string, CheckDef> cat = {
        {"constraint_residual", {"sup_constraint_residual", Bound::AtMost}},
        {"c_plus_matches_c0", {"c_plus_deviation", Bound::AtMost}},
        {"sup_c_deviation", {"sup_c_deviation", Bound::AtMost}},
        {"c_settling", {"c_settling_ratio", Bound::AtMost}},
        {"c_final_half_decreasing", {"c_final_half_ratio", Bound::AtMost}},
        {"tail_halving", {"tail_ratio", Bound::AtMost}},
        {"v2_decay_rate", {"v2_decay_rate", Bound::Above}},
        {"v2_decay_r2", {"v2_decay_r2", Bound::AtLeast}},
        {"energy_drift", {"energy_drift", Bound::AtMost}},
        {"rate_fd_agreement", {"rate_fd_relative", Bound::AtMost}},
        {"energy_pin_bounded", {"sup_energy_pin", Bound::AtMost}},
        {"elastic_collision", {"elastic_deviation", Bound::AtMost}},
        {"linear_decay_rate", {"linear_rate", Bound::AtLeast}},
        {"linear_decay_r2", {"linear_r2", Bound::AtLeast}},
        {"neutral_rate", {"abs_linear_rate", Bound::AtMost}},
        {"virial_monotone", {"virial_max_increase", Bound::Virial}},
    };
    return cat;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenario (de)serialization

Scenario Scenario::from_json(const json& j) {
    Scenario s;
    Reader r(j, "");
    s.name = r.required<std::string>("name");
    s.mode = mode_from(r.get<std::string>("mode", "nonlinear"), "mode");

    if (r.has("model")) {
        Reader m = r.child("model");
        const auto kind = m.get<std::string>("kind", "toda");
        if (kind == "toda") {
            s.model = PotentialModel::toda();
        } else if (kind == "fpu") {
            s.model = PotentialModel::fpu(m.get<double>("k2", 1.0), m.get<double>("k3", 1.0), m.get<double>("k4", 0.0));
        } else {
            throw Error("config key 'model.kind': unknown model '" + kind + "'");
        }
        if (kind == "toda") {
            for (const char* k : {"k2", "k3", "k4"}) {
                if (m.has(k)) throw Error(std::string("config key 'model.") + k + "': not used by the toda model");
            }
        }
        m.finish();
    }
    if (r.has("grid")) {
        Reader g = r.child("grid");
        const auto b = g.get<std::string>("boundary", "zero_padding");
        Boundary bd = Boundary::ZeroPadding;
        if (b == "periodic") bd = Boundary::Periodic;
        else if (b != "zero_padding") throw Error("config key 'grid.boundary': unknown boundary '" + b + "'");
        s.grid = LatticeGrid(g.get<long>("n_min", s.grid.n_min), g.get<long>("n_max", s.grid.n_max), bd);
        g.finish();
    }
    if (r.has("soliton")) {
        Reader so = r.child("soliton");
        s.soliton = std::make_pair(so.required<double>("c0"), so.get<double>("x0", 0.0));
        so.finish();
    } else {
        r.get<double>("soliton", 0.0);  // marks an explicit null as consumed
    }
    if (r.has("perturbation")) {
        Reader p = r.child("perturbation");
        Perturbation& q = s.perturbation;
        q.kind = perturbation_from(p.get<std::string>("kind", "none"), "perturbation.kind");
        q.amplitude = p.get<double>("amplitude", q.amplitude);
        q.width = p.get<double>("width", q.width);
        q.center = p.get<double>("center", q.center);
        q.half_width = p.get<double>("half_width", q.half_width);
        q.seed = p.get<std::uint64_t>("seed", q.seed);
        q.c2 = p.get<double>("c2", q.c2);
        q.x2 = p.get<double>("x2", q.x2);
        p.finish();
    }
    if (r.has("integrator")) {
        Reader in = r.child("integrator");
        IntegratorConfig& c = s.integrator;
        c.dt = in.get<double>("dt", c.dt);
        c.scheme = scheme_from_string(in.get<std::string>("scheme", to_string(c.scheme)));
        c.t_end = in.get<double>("t_end", c.t_end);
        c.sample_every = in.get<int>("sample_every", c.sample_every);
        in.finish();
    }
    if (r.has("weights")) {
        Reader w = r.child("weights");
        s.a = w.get<double>("a", s.a);
        w.finish();
    }
    if (r.has("virial")) {
        Reader v = r.child("virial");
        s.virial.a = v.get<double>("a", s.virial.a);
        s.virial.x0 = v.get<double>("x0", s.virial.x0);
        s.virial.slope = v.get<double>("slope", s.virial.slope);
        v.finish();
    }
    if (r.has("sigma")) s.sigma = r.get<double>("sigma", 0.0);
    else r.get<double>("sigma", 0.0);
    if (r.has("decay_window")) {
        const json& w = r.raw("decay_window");
        if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number()) {
            throw Error("config key 'decay_window': expected [t_lo, t_hi]");
        }
        s.decay_window = {w[0].get<double>(), w[1].get<double>()};
    }
    s.linear_input = r.get<std::string>("linear_input", s.linear_input);
    if (r.has("fpu_family")) {
        Reader f = r.child("fpu_family");
        s.fpu.c_lo = f.get<double>("c_lo", s.fpu.c_lo);
        s.fpu.c_hi = f.get<double>("c_hi", s.fpu.c_hi);
        s.fpu.L = f.get<double>("L", s.fpu.L);
        s.fpu.points_per_site = f.get<int>("points_per_site", s.fpu.points_per_site);
        s.fpu.nodes = f.get<int>("nodes", s.fpu.nodes);
        f.finish();
    }
    s.expect_fail = r.get<bool>("expect_fail", false);
    if (r.has("checks")) {
        const json& cs = r.raw("checks");
        if (!cs.is_array()) throw Error("config key 'checks': expected array");
        for (std::size_t i = 0; i < cs.size(); ++i) {
            Reader c(cs[i], "checks[" + std::to_string(i) + "]");
            s.checks.push_back({c.required<std::string>("name"), c.required<double>("tolerance")});
            c.finish();
        }
    }
    r.finish();
    s.validate();
    return s;
}

json Scenario::to_json() const {
    json j;
    j["name"] = name;
    j["mode"] = mode_name(mode);
    if (model.kind == PotentialKind::Toda) {
        j["model"] = {{"kind", "toda"}};
    } else {
        j["model"] = {{"kind", "fpu"}, {"k2", model.k2}, {"k3", model.k3}, {"k4", model.k4}};
    }
    j["grid"] = {{"n_min", grid.n_min},
                 {"n_max", grid.n_max},
                 {"boundary", grid.boundary == Boundary::Periodic ? "periodic" : "zero_padding"}};
    j["soliton"] = soliton ? json{{"c0", soliton->first}, {"x0", soliton->second}} : json(nullptr);
    j["perturbation"] = {{"kind", perturbation_name(perturbation.kind)},
                         {"amplitude", perturbation.amplitude},
                         {"width", perturbation.width},
                         {"center", perturbation.center},
                         {"half_width", perturbation.half_width},
                         {"seed", perturbation.seed},
                         {"c2", perturbation.c2},
                         {"x2", perturbation.x2}};
    j["integrator"] = {{"dt", integrator.dt},
                       {"scheme", to_string(integrator.scheme)},
                       {"t_end", integrator.t_end},
                       {"sample_every", integrator.sample_every}};
    j["weights"] = {{"a", a}};
    j["virial"] = {{"a", virial.a}, {"x0", virial.x0}, {"slope", virial.slope}};
    j["sigma"] = sigma ? json(*sigma) : json(nullptr);
    j["decay_window"] = {decay_window.first, decay_window.second};
    j["linear_input"] = linear_input;
    j["fpu_family"] = {{"c_lo", fpu.c_lo},
                       {"c_hi", fpu.c_hi},
                       {"L", fpu.L},
                       {"points_per_site", fpu.points_per_site},
                       {"nodes", fpu.nodes}};
    j["expect_fail"] = expect_fail;
    j["checks"] = json::array();
    for (const auto& c : checks) j["checks"].push_back({{"name", c.name}, {"tolerance", c.tolerance}});
    return j;
}

void Scenario::validate() const {
    if (name.empty() || !std::all_of(name.begin(), name.end(), [](char ch) {
            return std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.';
        })) {
        throw Error("scenario name must be nonempty and use only letters, digits, '-', '_' or '.'");
    }
    if (grid.n_max <= grid.n_min) throw Error("grid must have n_min < n_max");
    integrator.validate();
    const bool fpu_model = model.kind == PotentialKind::FPUPolynomial;
    const double cs = fpu_model ? fpu_sound_speed(model) : 1.0;
    if (fpu_model) {
        if (!(fpu.c_lo > cs && fpu.c_hi > fpu.c_lo)) throw Error("fpu_family needs c_s < c_lo < c_hi");
        if (fpu.points_per_site < 1 || fpu.nodes < 3) throw Error("fpu_family needs points_per_site >= 1, nodes >= 3");
    }
    if (mode != RunMode::Virial && !soliton) throw Error("a soliton is required in nonlinear and linearized modes");
    if (soliton) {
        const double c0 = soliton->first;
        if (!(c0 > cs)) throw Error("soliton speed must exceed the sound speed");
        if (fpu_model && !(c0 > fpu.c_lo && c0 < fpu.c_hi)) throw Error("soliton speed lies outside fpu_family");
    }
    const Perturbation& p = perturbation;
    if (!std::isfinite(p.amplitude) || p.amplitude < 0.0) throw Error("perturbation amplitude must be nonnegative");
    if (p.kind == PerturbationKind::LocalizedBump && !(p.width > 0.0)) throw Error("bump width must be positive");
    if (p.kind == PerturbationKind::RandomLocalized && !(p.half_width >= 0.0)) {
        throw Error("random perturbation half_width must be nonnegative");
    }
    if (p.kind == PerturbationKind::SecondSoliton) {
        if (mode != RunMode::Nonlinear) throw Error("second_soliton perturbations need nonlinear mode");
        if (!(p.c2 > cs)) throw Error("second soliton speed must exceed the sound speed");
        if (fpu_model) throw Error("second_soliton perturbations are only supported for the toda model");
    }
    if (p.kind != PerturbationKind::None && p.kind != PerturbationKind::SecondSoliton) {
        if (p.center < static_cast<double>(grid.n_min) || p.center > static_cast<double>(grid.n_max)) {
            throw Error("perturbation center lies outside the grid");
        }
    }
    if (!(a > 0.0)) throw Error("weights.a must be positive");
    if (mode == RunMode::Virial) virial.validate(cs);
    if (sigma && !(*sigma > cs)) throw Error("sigma must exceed the sound speed");
    if (!(decay_window.first < decay_window.second)) throw Error("decay_window must have t_lo < t_hi");
    static const std::set<std::string> inputs = {"q_random", "raw_random", "ud", "uc"};
    if (!inputs.count(linear_input)) throw Error("linear_input must be one of q_random, raw_random, ud, uc");
    if (mode == RunMode::Linearized && (linear_input == "q_random" || linear_input == "raw_random") &&
        p.kind != PerturbationKind::RandomLocalized) {
        throw Error("random linear inputs need a random_localized perturbation");
    }
    for (const auto& c : checks) {
        if (!check_catalogue().count(c.name)) throw Error("unknown check '" + c.name + "'");
        if (!std::isfinite(c.tolerance)) throw Error("check '" + c.name + "' needs a finite tolerance");
    }
}

// ---------------------------------------------------------------------------
// Presets

std::vector<std::string> preset_names() {
    return {"unperturbed",          "theorem1-small-bump", "linearized-decay",  "linearized-neutral-ud",
            "linearized-neutral-uc", "virial",              "virial-fast-soliton", "two-soliton",
            "fpu-small-bump"};
}

Scenario preset(const std::string& name) {
    Scenario s;
    s.name = name;
    s.integrator = {0.01, Scheme::RK4, 200.0, 10};
    if (name == "unperturbed") {
        s.soliton = {{1.5, 0.0}};
        s.integrator.sample_every = 50;
        s.checks = {{"constraint_residual", 1e-9}, {"c_plus_matches_c0", 1e-6}};
    } else if (name == "theorem1-small-bump") {
        s.soliton = {{1.5, 0.0}};
        s.perturbation.kind = PerturbationKind::LocalizedBump;
        s.perturbation.amplitude = 1e-2;
        // The tail norm decays below the O(dt^4) defect of the integrated wave by t = 100 unless dt is small.
        s.integrator = {0.0005, Scheme::RK4, 200.0, 100};
        s.checks = {{"constraint_residual", 1e-9},    {"sup_c_deviation", 5e-2}, {"c_final_half_decreasing", 1.0},
                    {"tail_halving", 0.5},            {"c_settling", 0.1},       {"v2_decay_rate", 0.0},
                    {"v2_decay_r2", 0.9},             {"rate_fd_agreement", 0.05}};
    } else if (name == "linearized-decay" || name == "linearized-neutral-ud" || name == "linearized-neutral-uc") {
        s.mode = RunMode::Linearized;
        s.grid = LatticeGrid(-150, 300);
        s.soliton = {{2.0, 0.0}};
        s.a = 0.5;
        s.decay_window = {20.0, 100.0};
        s.integrator = {0.002, Scheme::RK4, 100.0, 250};
        s.perturbation.kind = PerturbationKind::RandomLocalized;
        s.perturbation.amplitude = 1.0;
        s.perturbation.seed = 2;
        if (name == "linearized-decay") {
            s.linear_input = "q_random";
            s.checks = {{"linear_decay_rate", 0.3}, {"linear_decay_r2", 0.9}};
        } else {
            s.linear_input = name == "linearized-neutral-ud" ? "ud" : "uc";
            s.perturbation = {};
            s.integrator = {0.01, Scheme::RK4, 100.0, 50};
            s.checks = {{"neutral_rate", 0.02}};
        }
    } else if (name == "virial" || name == "virial-fast-soliton") {
        s.mode = RunMode::Virial;
        s.grid = LatticeGrid(-200, 400);
        s.integrator = {0.01, Scheme::RK4, 100.0, 10};
        s.virial = {0.1, 0.0, 1.2};
        if (name == "virial") {
            s.perturbation.kind = PerturbationKind::RandomLocalized;
            s.perturbation.amplitude = 1e-2;
            s.perturbation.seed = 1;
        } else {
            s.soliton = {{1.5, 0.0}};
            s.expect_fail = true;
        }
        s.checks = {{"virial_monotone", 1e-10}};
    } else if (name == "two-soliton") {
        s.grid = LatticeGrid(-60, 360);
        s.soliton = {{1.8, 0.0}};
        s.perturbation.kind = PerturbationKind::SecondSoliton;
        s.perturbation.c2 = 1.2;
        s.perturbation.x2 = 30.0;
        s.integrator = {0.01, Scheme::RK4, 150.0, 10};
        s.checks = {{"elastic_collision", 1e-3}};
    } else if (name == "fpu-small-bump") {
        // Thresholds of the Toda run, relaxed 2x.
        s.model = PotentialModel::fpu(1.0, 1.0, 0.0);
        s.grid = LatticeGrid(-150, 550);
        s.soliton = {{1.02, 0.0}};
        s.perturbation.kind = PerturbationKind::LocalizedBump;
        s.perturbation.amplitude = 1e-3;
        s.integrator = {0.01, Scheme::RK4, 400.0, 50};
        s.checks = {{"constraint_residual", 2e-9}, {"sup_c_deviation", 1e-2}, {"c_settling", 0.2},
                    {"tail_halving", 1.0},         {"v2_decay_rate", 0.0},   {"v2_decay_r2", 0.45}};
    } else {
        throw Error("unknown preset '" + name + "'");
    }
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------
// Overrides

json apply_overrides(json j, const std::vector<std::string>& assignments) {
    for (const auto& as : assignments) {
        const auto eq = as.find('=');
        if (eq == std::string::npos || eq == 0) throw Error("override '" + as + "' must look like key=value");
        const std::string key = as.substr(0, eq);
        const std::string text = as.substr(eq + 1);
        json value = json::parse(text, nullptr, false);
        if (value.is_discarded()) value = text;

        json* node = &j;
        std::size_t start = 0;
        while (true) {
            const auto dot = key.find('.', start);
            const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (part.empty()) throw Error("override key '" + key + "' has an empty segment");
            json* next = nullptr;
            if (node->is_array()) {
                std::size_t idx = 0;
                try {
                    idx = std::stoul(part);
                } catch (const std::exception&) {
                    throw Error("override key '" + key + "': '" + part + "' is not an array index");
                }
                if (idx >= node->size()) throw Error("override key '" + key + "': index out of range");
                next = &(*node)[idx];
            } else {
                if (node->is_null()) *node = json::object();
                if (!node->is_object()) throw Error("override key '" + key + "': '" + part + "' is not an object");
                next = &(*node)[part];
            }
            node = next;
            if (dot == std::string::npos) break;
            start = dot + 1;
        }
        *node = value;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Execution

namespace {

namespace fs = std::filesystem;

std::unique_ptr<SolitonFamily> make_family(const Scenario& s) {
    if (s.model.kind == PotentialKind::Toda) return std::make_unique<TodaFamily>();
    return std::make_unique<FpuFamily>(s.model, s.fpu.c_lo, s.fpu.c_hi, s.fpu.L, s.fpu.points_per_site, s.fpu.nodes);
}

LatticeField random_localized(const LatticeGrid& g, const Perturbation& p) {
    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    LatticeField v(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (std::abs(static_cast<double>(g.site(i)) - p.center) > p.half_width) continue;
        v.r()[i] = U(rng);
        v.p()[i] = U(rng);
    }
    const double nv = l2_norm(v);
    if (nv == 0.0) throw Error("random perturbation support contains no sites");
    v *= p.amplitude / nv;
    return v;
}

LatticeField make_perturbation(const Scenario& s, const SolitonFamily& family) {
    const Perturbation& p = s.perturbation;
    const LatticeGrid& g = s.grid;
    switch (p.kind) {
        case PerturbationKind::None: return LatticeField(g);
        case PerturbationKind::LocalizedBump: {
            LatticeField v(g);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double z = (static_cast<double>(g.site(i)) - p.center) / p.width;
                v.r()[i] = p.amplitude * std::exp(-z * z);
            }
            return v;
        }
        case PerturbationKind::SecondSoliton: return family.sample(g, p.c2, p.x2);
        case PerturbationKind::RandomLocalized: return random_localized(g, p);
    }
    return LatticeField(g);
}

// The wave occupies [x - 25 / kappa, x + c t + 25 / kappa] up to t_end.
void check_in_window(const Scenario& s, const SolitonFamily& family, double c, double x, const char* what) {
    const double margin = 25.0 / family.kappa(c);
    const double lo = x - margin;
    const double hi = x + c * s.integrator.t_end + margin;
    if (lo < static_cast<double>(s.grid.n_min) || hi > static_cast<double>(s.grid.n_max)) {
        std::ostringstream os;
        os << what << " leaves the window: it needs [" << lo << ", " << hi << "] within [" << s.grid.n_min << ", "
           << s.grid.n_max << "]";
        throw Error(os.str());
    }
}

void check_setup(const Scenario& s, const SolitonFamily& family) {
    if (s.soliton) check_in_window(s, family, s.soliton->first, s.soliton->second, "soliton");
    const Perturbation& p = s.perturbation;
    if (p.kind == PerturbationKind::SecondSoliton) check_in_window(s, family, p.c2, p.x2, "second soliton");
    double extent = 0.0;
    if (p.kind == PerturbationKind::LocalizedBump) extent = 3.0 * p.width;
    if (p.kind == PerturbationKind::RandomLocalized) extent = p.half_width;
    if (p.center - extent < static_cast<double>(s.grid.n_min) ||
        p.center + extent > static_cast<double>(s.grid.n_max)) {
        if (p.kind != PerturbationKind::None && p.kind != PerturbationKind::SecondSoliton) {
            throw Error("perturbation support leaves the window");
        }
    }
}

struct Ctx {
    std::map<std::string, double> metrics;
    std::map<std::string, json> fitted;  // keyed by metric
    std::map<std::string, std::string> unavailable;
};

double sup_ratio(double num, double den) {
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return num / den;
}

// Trapezoid of ||v2||_X^2 over consecutive valid samples with t <= t_max, over ||v0||^2.
double v2_integral(const ModulationTrack& tr, double t_max) {
    if (tr.v0_norm == 0.0) return 0.0;
    double s = 0.0;
    for (std::size_t k = 1; k < tr.size(); ++k) {
        const auto& a = tr.samples[k - 1];
        const auto& b = tr.samples[k];
        if (!a.valid || !b.valid || b.t > t_max + 1e-9) continue;
        s += 0.5 * (a.norm_v2_X * a.norm_v2_X + b.norm_v2_X * b.norm_v2_X) * (b.t - a.t);
    }
    return s / (tr.v0_norm * tr.v0_norm);
}

const TrackSample& nearest_valid(const std::vector<const TrackSample*>& valid, double t) {
    const TrackSample* best = valid.front();
    for (const auto* s : valid) {
        if (std::abs(s->t - t) < std::abs(best->t - t)) best = s;
    }
    return *best;
}

struct NonlinearOut {
    Trajectory u;
    ModulationTrack track;
    std::vector<double> tail_t, tail_v;
    std::vector<double> virial_t, virial_M;  // virial sequence of the full v
};

void nonlinear_metrics(const Scenario& s, const SolitonFamily& family, NonlinearOut& out, Ctx& ctx) {
    const ModulationTrack& tr = out.track;
    const double c0 = s.soliton->first;
    const double T = s.integrator.t_end;
    auto& m = ctx.metrics;

    std::vector<const TrackSample*> valid;
    for (const auto& x : tr.samples) {
        if (x.valid) valid.push_back(&x);
    }
    m["failed_samples"] = static_cast<double>(tr.size() - valid.size());
    if (valid.empty()) throw Error("no sample could be decomposed");

    // c_plus: mean over the final 20% of samples.
    const std::size_t n = tr.size();
    const std::size_t first = n - std::max<std::size_t>(1, n / 5);
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t k = first; k < n; ++k) {
        if (!tr.samples[k].valid) continue;
        sum += tr.samples[k].c;
        ++cnt;
    }
    if (cnt == 0) throw Error("no valid sample in the final 20% of the run");
    const double c_plus = sum / static_cast<double>(cnt);
    m["c_plus"] = c_plus;
    m["c_plus_deviation"] = std::abs(c_plus - c0);
    ctx.fitted["c_plus"] = {{"t_from", tr.samples[first].t}, {"samples", cnt}};

    double supF = 0.0, supc = 0.0, supmod = 0.0, supcdot = 0.0, suppin = 0.0;
    for (const auto* x : valid) {
        supF = std::max({supF, std::abs(x->F1), std::abs(x->F2)});
        supc = std::max(supc, std::abs(x->c - c0));
        supmod = std::max(supmod, std::abs(x->c - c0) + std::abs(x->xdot - c0));
        supcdot = std::max(supcdot, std::abs(x->cdot));
        suppin = std::max(suppin, x->energy_pin);
    }
    m["sup_constraint_residual"] = supF;
    m["sup_c_deviation"] = supc;
    m["sup_modulation"] = supmod;
    m["sup_cdot"] = supcdot;
    m["sup_energy_pin"] = suppin;
    m["v0_norm"] = tr.v0_norm;
    if (s.perturbation.amplitude > 0.0) m["sup_modulation_over_eps"] = supmod / s.perturbation.amplitude;

    const double c_start = nearest_valid(valid, 0.0).c;
    const double c_half = nearest_valid(valid, 0.5 * T).c;
    const double c_end = nearest_valid(valid, T).c;
    m["c_settling_ratio"] = sup_ratio(std::abs(c_end - c_half), std::abs(c_half - c_start));
    ctx.fitted["c_settling_ratio"] = {{"c_0", c_start}, {"c_half", c_half}, {"c_end", c_end}};

    double q3 = 0.0, q4 = 0.0;
    for (const auto* x : valid) {
        if (x->t < 0.5 * T) continue;
        (x->t < 0.75 * T ? q3 : q4) = std::max(x->t < 0.75 * T ? q3 : q4, std::abs(x->c - c_plus));
    }
    // Deviations below 1e-12 c_plus are under the resolution of the constraint solve.
    const double floor_c = 1e-12 * c_plus;
    m["c_final_half_ratio"] = sup_ratio(std::max(q4, floor_c), std::max(q3, floor_c));
    ctx.fitted["c_final_half_ratio"] = {{"sup_third_quarter", q3}, {"sup_fourth_quarter", q4}, {"floor", floor_c}};

    // Tail norm ahead of sigma t, measured against the limiting wave.
    const double sigma = s.sigma ? *s.sigma : 0.5 * (family.sound_speed() + c_plus);
    m["sigma"] = sigma;
    if (c_plus > family.c_min() && c_plus < family.c_max()) {
        for (const auto* x : valid) {
            if (sigma * x->t > static_cast<double>(s.grid.n_max)) continue;
            out.tail_t.push_back(x->t);
            out.tail_v.push_back(tail_norm(out.u.states[static_cast<std::size_t>(x - tr.samples.data())], sigma, x->t,
                                           TailReference{&family, c_plus, x->x}));
        }
    }
    if (sigma * T > static_cast<double>(s.grid.n_max)) {
        ctx.unavailable["tail_ratio"] = "tail region sigma T lies beyond the window";
    } else if (out.tail_t.empty()) {
        ctx.unavailable["tail_ratio"] = "limiting speed outside the family range";
    } else {
        auto at = [&](double t) {
            std::size_t b = 0;
            for (std::size_t k = 0; k < out.tail_t.size(); ++k) {
                if (std::abs(out.tail_t[k] - t) < std::abs(out.tail_t[b] - t)) b = k;
            }
            return out.tail_v[b];
        };
        const double th = at(0.5 * T), te = at(T);
        m["tail_half"] = th;
        m["tail_end"] = te;
        m["tail_ratio"] = sup_ratio(te, th);
        ctx.fitted["tail_ratio"] = {{"sigma", sigma}, {"reference_speed", c_plus}, {"t_half", 0.5 * T}, {"t_end", T}};
    }

    // Exponential decay fit of ||v2||_X.
    try {
        std::vector<double> t, y;
        for (const auto* x : valid) {
            t.push_back(x->t);
            y.push_back(x->norm_v2_X);
        }
        const DecayFit f = fit_decay(t, y, s.decay_window.first, s.decay_window.second);
        m["v2_decay_rate"] = f.rate;
        m["v2_decay_r2"] = f.r_squared;
        const json fj = {{"rate", f.rate}, {"intercept", f.intercept}, {"r_squared", f.r_squared},
                         {"t_lo", f.t_lo},  {"t_hi", f.t_hi},           {"samples", f.samples}};
        ctx.fitted["v2_decay_rate"] = fj;
        ctx.fitted["v2_decay_r2"] = fj;
    } catch (const Error& e) {
        ctx.unavailable["v2_decay_rate"] = ctx.unavailable["v2_decay_r2"] = e.what();
    }

    const double E0 = out.u.energies.front();
    m["energy_drift"] = std::abs(out.u.energies.back() - E0) / std::abs(E0);

    // Centered differences of c against the algebraic rate.
    double sup_diff = 0.0, sup_rate = 0.0;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const auto& a = tr.samples[k - 1];
        const auto& b = tr.samples[k];
        const auto& d = tr.samples[k + 1];
        if (!a.valid || !b.valid || !d.valid) continue;
        const double fd = (d.c - a.c) / (d.t - a.t);
        sup_diff = std::max(sup_diff, std::abs(fd - b.cdot));
        sup_rate = std::max(sup_rate, std::abs(b.cdot));
    }
    m["rate_fd_relative"] = sup_ratio(sup_diff, sup_rate);
    ctx.fitted["rate_fd_relative"] = {{"sup_difference", sup_diff}, {"sup_cdot", sup_rate}};

    // Full-v virial sequence; the interaction with the wave forces it, so it is reported only.
    if (s.virial.slope > family.sound_speed() && s.virial.a > 0.0) {
        double inc = 0.0;
        for (const auto* x : valid) {
            const LatticeField& u = out.u.states[static_cast<std::size_t>(x - tr.samples.data())];
            const LatticeField v = u - family.sample(s.grid, x->c, x->x);
            out.virial_t.push_back(x->t);
            out.virial_M.push_back(virial_energy(v, family.potential(), s.virial, x->t));
            const std::size_t k = out.virial_M.size();
            if (k > 1) inc = std::max(inc, out.virial_M[k - 1] - out.virial_M[k - 2]);
        }
        if (!out.virial_M.empty() && out.virial_M.front() != 0.0) {
            m["virial_full_max_increase"] = inc / std::abs(out.virial_M.front());
        }
    }
    const double kappa0 = family.kappa(c0);
    m["a_over_kappa"] = s.a / kappa0;
    m["regime_a_below_2kappa"] = s.a < 2.0 * kappa0 ? 1.0 : 0.0;
    m["regime_a_at_most_kappa"] = s.a <= kappa0 ? 1.0 : 0.0;
    m["regime_a_below_kappa_over_3"] = s.a < kappa0 / 3.0 ? 1.0 : 0.0;

    m["v2_integral"] = v2_integral(tr, T);
    m["v2_integral_half"] = v2_integral(tr, 0.5 * T);

    double cb = 0.0;
    std::size_t nb = 0;
    for (const auto* x : valid) {
        if (x->t > 0.1 * T) break;
        cb += x->c;
        ++nb;
    }
    if (nb > 0) {
        m["c_before"] = cb / static_cast<double>(nb);
        m["elastic_deviation"] = std::abs(c_plus - m["c_before"]);
        ctx.fitted["elastic_deviation"] = {{"c_before", m["c_before"]}, {"c_after", c_plus}, {"before_until", 0.1 * T}};
    } else {
        ctx.unavailable["elastic_deviation"] = "no valid sample before the interaction";
    }
}

const CheckSpec* find_check(const Scenario& s, const std::string& name) {
    for (const auto& c : s.checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

CheckResult evaluate(const CheckSpec& spec, const Ctx& ctx, const std::string& failure) {
    const CheckDef& def = check_catalogue().at(spec.name);
    CheckResult r{spec.name, false, std::nan(""), spec.tolerance, json::object()};
    const auto it = ctx.metrics.find(def.metric);
    if (it == ctx.metrics.end()) {
        std::string why = failure;
        if (const auto u = ctx.unavailable.find(def.metric); u != ctx.unavailable.end()) why = u->second;
        if (why.empty()) why = "metric not produced in this mode";
        r.fitted = {{"unavailable", why}};
        return r;
    }
    r.value = it->second;
    if (const auto f = ctx.fitted.find(def.metric); f != ctx.fitted.end()) r.fitted = f->second;
    switch (def.bound) {
        case Bound::AtMost: r.pass = r.value <= spec.tolerance; break;
        case Bound::AtLeast: r.pass = r.value >= spec.tolerance; break;
        case Bound::Above: r.pass = r.value > spec.tolerance; break;
        case Bound::Virial: {
            const auto b = ctx.metrics.find("virial_bound_holds");
            r.pass = r.value <= spec.tolerance && b != ctx.metrics.end() && b->second == 1.0;
            break;
        }
    }
    return r;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p);
    if (!os) throw Error("cannot write " + p.string());
    return os;
}

}  // namespace

bool RunReport::passed() const {
    return ok && std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

namespace {

std::string status_of(const RunReport& r) {
    const bool p = r.passed();
    if (r.expect_fail) return p ? "xpass" : "xfail";
    return p ? "pass" : "fail";
}

}  // namespace

json RunReport::to_json() const {
    json j;
    j["scenario_id"] = scenario_id;
    j["status"] = status_of(*this);
    j["ok"] = ok;
    j["failed_stage"] = failed_stage;
    j["cause"] = cause;
    j["expect_fail"] = expect_fail;
    j["c_plus"] = c_plus;
    j["metrics"] = metrics;
    j["checks"] = json::array();
    for (const auto& c : checks) {
        j["checks"].push_back(
            {{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"tolerance", c.tolerance}, {"fitted", c.fitted}});
    }
    j["artifacts"] = artifacts;
    j["scenario"] = scenario;
    return j;
}

RunReport run_scenario(const Scenario& s, const std::optional<fs::path>& out_dir, RunData* data) {
    RunReport rep;
    rep.scenario_id = s.name;
    rep.scenario = s.to_json();
    rep.expect_fail = s.expect_fail;
    Ctx ctx;
    std::string stage = "setup";

    std::unique_ptr<SolitonFamily> family;
    std::optional<NonlinearOut> nl;
    std::optional<Trajectory> traj;
    std::optional<MonotonicityReport> vir;
    std::vector<double> lin_t, lin_norm;

    try {
        s.validate();
        family = make_family(s);
        check_setup(s, *family);
        const PotentialModel& V = family->potential();
        const LatticeField v0 = make_perturbation(s, *family);

        if (s.mode == RunMode::Nonlinear) {
            const auto [c0, x0] = *s.soliton;
            stage = "evolve";
            nl.emplace();
            nl->u = evolve(family->sample(s.grid, c0, x0) + v0, V, s.integrator);
            const Trajectory v1 = evolve(v0, V, s.integrator);
            stage = "split";
            SplitOptions so;
            so.a = s.a;
            so.keep_fields = false;
            so.tolerate_failures = s.perturbation.kind == PerturbationKind::SecondSoliton;
            nl->track = split(nl->u, v1, c0, x0 / c0, *family, so);
            stage = "diagnostics";
            nonlinear_metrics(s, *family, *nl, ctx);
            rep.c_plus = ctx.metrics.at("c_plus");
        } else if (s.mode == RunMode::Linearized) {
            const auto [c0, x0] = *s.soliton;
            const SolitonTangents tan0 = family->modes(s.grid, c0, x0).tangents();
            LatticeField w(s.grid);
            if (s.linear_input == "ud") {
                w = tan0.ud;
            } else if (s.linear_input == "uc") {
                w = tan0.uc;
            } else {
                w = random_localized(s.grid, s.perturbation);
                if (s.linear_input == "q_random") {
                    const Projection q = project_Qc(w, tan0);
                    ctx.metrics["projection_warning"] = q.warning ? 1.0 : 0.0;
                    w = q.value;
                }
            }
            stage = "evolve";
            traj = evolve_linearized(w, *family, c0, x0, s.integrator);
            stage = "diagnostics";
            WeightSpec ws{s.a, [c0 = c0, x0 = x0](double t) { return x0 + c0 * t; }, 0.0};
            for (std::size_t k = 0; k < traj->size(); ++k) {
                const double t = traj->times[k];
                LatticeField f = traj->states[k];
                // Q(t) commutes with the linearized flow, so this filters only the
                // neutral components that integration error re-injects.
                if (s.linear_input == "q_random") {
                    f = project_Qc(f, family->modes(s.grid, c0, x0 + c0 * t).tangents()).value;
                }
                lin_t.push_back(t);
                lin_norm.push_back(weighted_norm(f, ws, NormKind::X, t));
            }
            const DecayFit fit = fit_decay(lin_t, lin_norm, s.decay_window.first, s.decay_window.second);
            ctx.metrics["linear_rate"] = fit.rate;
            ctx.metrics["abs_linear_rate"] = std::abs(fit.rate);
            ctx.metrics["linear_r2"] = fit.r_squared;
            ctx.metrics["rate_bound_b"] = c0 * s.a - 2.0 * std::sinh(0.5 * s.a);
            const json fj = {{"rate", fit.rate},     {"intercept", fit.intercept}, {"r_squared", fit.r_squared},
                             {"t_lo", fit.t_lo},     {"t_hi", fit.t_hi},           {"samples", fit.samples},
                             {"rate_bound_b", ctx.metrics["rate_bound_b"]}};
            for (const char* k : {"linear_rate", "abs_linear_rate", "linear_r2"}) ctx.fitted[k] = fj;
        } else {
            LatticeField w = v0;
            if (s.soliton) w += family->sample(s.grid, s.soliton->first, s.soliton->second);
            stage = "evolve";
            traj = evolve(w, V, s.integrator);
            stage = "diagnostics";
            const CheckSpec* c = find_check(s, "virial_monotone");
            vir = monotonicity_check(*traj, V, s.virial, c ? c->tolerance : 1e-10, 1e-10);
            ctx.metrics["virial_max_increase"] = vir->max_increase;
            ctx.metrics["virial_monotone"] = vir->monotone ? 1.0 : 0.0;
            ctx.metrics["virial_bound_holds"] = vir->bound_holds ? 1.0 : 0.0;
            ctx.metrics["virial_M0"] = vir->M.empty() ? 0.0 : vir->M.front();
            json fj = {{"slope", s.virial.slope}, {"a", s.virial.a}};
            if (vir->delta) {
                ctx.metrics["virial_delta"] = *vir->delta;
                fj["delta"] = *vir->delta;
            }
            if (vir->first_violation_t) fj["first_violation_t"] = *vir->first_violation_t;
            ctx.fitted["virial_max_increase"] = fj;
        }
    } catch (const std::exception& e) {
        rep.ok = false;
        rep.failed_stage = stage;
        rep.cause = e.what();
    }

    rep.metrics = ctx.metrics;
    const std::string why = rep.ok ? "" : "stage '" + rep.failed_stage + "' failed: " + rep.cause;
    for (const auto& c : s.checks) rep.checks.push_back(evaluate(c, ctx, why));

    if (out_dir) {
        try {
            fs::create_directories(*out_dir / "diagnostics");
            if (nl) {
                auto os = open_out(*out_dir / "track.csv");
                write_track_csv(os, nl->track);
                rep.artifacts.push_back("track.csv");
                auto es = open_out(*out_dir / "diagnostics" / "energy.csv");
                write_trajectory_csv(es, nl->u);
                rep.artifacts.push_back("diagnostics/energy.csv");
                if (!nl->virial_t.empty()) {
                    auto vs = open_out(*out_dir / "diagnostics" / "virial_full.csv");
                    write_series_csv(vs, {"t", "M"}, {&nl->virial_t, &nl->virial_M});
                    rep.artifacts.push_back("diagnostics/virial_full.csv");
                }
                if (!nl->tail_t.empty()) {
                    auto ts = open_out(*out_dir / "diagnostics" / "tail.csv");
                    write_series_csv(ts, {"t", "tail_norm"}, {&nl->tail_t, &nl->tail_v});
                    rep.artifacts.push_back("diagnostics/tail.csv");
                }
            }
            if (!lin_t.empty()) {
                auto os = open_out(*out_dir / "diagnostics" / "linear_norm.csv");
                write_series_csv(os, {"t", "norm_X", "quadratic_energy"}, {&lin_t, &lin_norm, &traj->energies});
                rep.artifacts.push_back("diagnostics/linear_norm.csv");
            }
            if (vir) {
                auto os = open_out(*out_dir / "diagnostics" / "virial.csv");
                write_series_csv(os, {"t", "M", "D", "integrated_D"}, {&vir->times, &vir->M, &vir->D, &vir->integrated_D});
                rep.artifacts.push_back("diagnostics/virial.csv");
            }
            rep.artifacts.push_back("report.json");
            rep.artifacts.push_back("meta.json");
            json meta = {{"version", TODALAB_VERSION},
                         {"seed", s.perturbation.seed},
                         {"scenario", s.name},
                         {"run", trajectory_meta(s.integrator, s.grid, s.model)}};
            auto ms = open_out(*out_dir / "meta.json");
            ms << meta.dump(2) << '\n';
            auto rs = open_out(*out_dir / "report.json");
            rs << rep.to_json().dump(2) << '\n';
        } catch (const std::exception& e) {
            rep.ok = false;
            rep.failed_stage = "write";
            rep.cause = e.what();
        }
    }

    if (data) {
        if (nl) {
            data->track = std::move(nl->track);
            data->times = nl->u.times;
            data->energies = nl->u.energies;
        } else if (traj) {
            data->times = traj->times;
            data->energies = traj->energies;
        }
        data->virial = std::move(vir);
        data->linear_norm = std::move(lin_norm);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Suites

namespace {

json make_summary(const std::vector<json>& reports) {
    json s = {{"total", 0}, {"passed", 0}, {"failed", 0}, {"xfail", 0}, {"xpass", 0}, {"scenarios", json::array()}};
    for (const auto& r : reports) {
        const std::string st = r.value("status", "fail");
        s["total"] = s["total"].get<int>() + 1;
        const char* bucket = st == "pass" ? "passed" : st == "xfail" ? "xfail" : st == "xpass" ? "xpass" : "failed";
        s[bucket] = s[bucket].get<int>() + 1;
        json failed = json::array();
        for (const auto& c : r.value("checks", json::array())) {
            if (!c.value("pass", false)) failed.push_back(c.value("name", ""));
        }
        json entry = {{"name", r.value("scenario_id", "")}, {"status", st}, {"failed_checks", failed}};
        if (!r.value("ok", true)) entry["cause"] = r.value("failed_stage", "") + ": " + r.value("cause", "");
        s["scenarios"].push_back(entry);
    }
    return s;
}

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

SuiteResult run_suite(const fs::path& config_path) {
    std::ifstream in(config_path);
    if (!in) throw Error("cannot read config " + config_path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        throw Error(config_path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
    }
    return run_suite(j, config_path.parent_path());
}

SuiteResult run_suite(const json& config, const fs::path& base_dir) {
    Reader r(config, "");
    const std::string output_dir = r.get<std::string>("output_dir", "");
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int parallel = r.get<int>("parallel", static_cast<int>(std::min(4u, hw)));
    if (parallel < 1) throw Error("config key 'parallel': must be at least 1");

    std::vector<Scenario> scenarios;
    if (r.has("scenarios")) {
        const json& list = r.raw("scenarios");
        if (!list.is_array()) throw Error("config key 'scenarios': expected array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string where = "scenarios[" + std::to_string(i) + "]";
            try {
                if (list[i].is_object() && list[i].contains("preset")) {
                    Reader e(list[i], where);
                    json sj = preset(e.required<std::string>("preset")).to_json();
                    if (e.has("name")) sj["name"] = e.required<std::string>("name");
                    if (e.has("set")) {
                        const json& set = e.raw("set");
                        if (!set.is_object()) throw Error("config key '" + where + ".set': expected object");
                        std::vector<std::string> as;
                        for (const auto& [k, v] : set.items()) as.push_back(k + "=" + v.dump());
                        sj = apply_overrides(sj, as);
                    }
                    e.finish();
                    scenarios.push_back(Scenario::from_json(sj));
                } else {
                    scenarios.push_back(Scenario::from_json(list[i]));
                }
            } catch (const Error& err) {
                throw Error(where + ": " + err.what());
            }
        }
    }
    r.finish();

    std::set<std::string> names;
    for (const auto& s : scenarios) {
        if (!names.insert(s.name).second) throw Error("duplicate scenario name '" + s.name + "'");
    }

    const std::optional<fs::path> out_root =
        output_dir.empty() ? std::nullopt : std::optional<fs::path>(base_dir / output_dir);
    SuiteResult res;
    res.reports.resize(scenarios.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < scenarios.size(); i = next++) {
            std::optional<fs::path> dir;
            if (out_root) dir = *out_root / scenarios[i].name;
            res.reports[i] = run_scenario(scenarios[i], dir);
        }
    };
    std::vector<std::future<void>> pool;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(parallel), scenarios.size());
    for (std::size_t w = 0; w < workers; ++w) pool.push_back(std::async(std::launch::async, worker));
    for (auto& f : pool) f.get();

    std::vector<json> js;
    for (const auto& rep : res.reports) js.push_back(rep.to_json());
    res.summary = make_summary(js);
    res.exit_code = (res.summary["failed"].get<int>() + res.summary["xpass"].get<int>()) == 0 ? 0 : 1;
    if (out_root) {
        fs::create_directories(*out_root);
        auto os = open_out(*out_root / "summary.json");
        os << res.summary.dump(2) << '\n';
    }
    return res;
}

json summarize_reports(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().filename() == "report.json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<json> reports;
    for (const auto& f : files) {
        std::ifstream in(f);
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw Error("malformed report " + f.string());
        reports.push_back(std::move(j));
    }
    return make_summary(reports);
}

}  // namespace todalab
