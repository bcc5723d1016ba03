#include "weakboost/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "toml.hpp"

namespace wb {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void check_keys(const toml::table& t, const std::string& where, std::initializer_list<const char*> known) {
    for (const auto& [k, v] : t) {
        (void)v;
        bool ok = false;
        for (const char* name : known)
            if (k.str() == name) ok = true;
        if (!ok) throw ConfigError("unknown key '" + std::string(k.str()) + "' in [" + where + "]");
    }
}

template <class T>
T get_or(const toml::table& t, const char* key, T fallback) {
    const toml::node* n = t.get(key);
    if (!n) return fallback;
    if constexpr (std::is_same_v<T, double>) {
        if (auto v = n->value<double>()) return *v;
    } else if constexpr (std::is_same_v<T, bool>) {
        if (auto v = n->value<bool>()) return *v;
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (auto v = n->value<std::string>()) return *v;
    } else {
        if (auto v = n->value<int64_t>()) return static_cast<T>(*v);
    }
    throw ConfigError(std::string("bad value type for key '") + key + "'");
}

std::vector<int> int_list(const toml::table& t, const char* key, std::vector<int> fallback) {
    const toml::node* n = t.get(key);
    if (!n) return fallback;
    std::vector<int> out;
    if (auto v = n->value<int64_t>()) return {static_cast<int>(*v)};
    const toml::array* arr = n->as_array();
    if (!arr) throw ConfigError(std::string("key '") + key + "' must be an integer or a list of integers");
    for (const auto& e : *arr) {
        auto v = e.value<int64_t>();
        if (!v) throw ConfigError(std::string("key '") + key + "' must hold integers");
        out.push_back(static_cast<int>(*v));
    }
    return out;
}

const toml::table* sub(const toml::table& root, const char* name) {
    const toml::node* n = root.get(name);
    if (!n) return nullptr;
    if (!n->is_table()) throw ConfigError(std::string("[") + name + "] must be a table");
    return n->as_table();
}

ModelKind parse_model(const std::string& s) {
    if (s == "cir") return ModelKind::cir;
    if (s == "heston") return ModelKind::heston;
    if (s == "multifactor") return ModelKind::multifactor;
    throw ConfigError("unknown model '" + s + "'");
}

std::string to_string(ModelKind m) {
    switch (m) {
        case ModelKind::cir: return "cir";
        case ModelKind::heston: return "heston";
        case ModelKind::multifactor: return "multifactor";
    }
    return "?";
}

// ---------------------------------------------------------------------------

template <class Scheme>
PointResult run_with(const Scheme& s, const ExperimentConfig& cfg, int n, int level, CouplingKind coupling,
                     double hw95) {
    PointResult pr;
    pr.n = n;
    pr.level = level;
    auto t0 = Clock::now();
    bool fixed = hw95 <= 0.0 && cfg.samples > 0;
    if (!fixed || cfg.control) pr.pilot = pilot_run(s, n, level, coupling, cfg.seed, cfg.pilot, cfg.control);
    uint64_t m1 = 0, m2 = 0;
    if (fixed) {
        m1 = cfg.samples;
        m2 = level >= 2 ? cfg.samples : 0;
    } else {
        double target = hw95 > 0.0 ? hw95 : cfg.epsilon;
        if (!(target > 0.0)) throw ConfigError("either samples or epsilon must be positive");
        double e = target / 1.96;
        if (level == 1) {
            m1 = static_cast<uint64_t>(std::ceil(pr.pilot.sigma2_sq / (e * e)));
        } else {
            std::tie(m1, m2) = allocate_samples(pr.pilot.sigma2_sq, pr.pilot.sigma4_sq, pr.pilot.gamma,
                                                pr.pilot.zeta, e, cfg.layout);
        }
    }
    m1 = std::max<uint64_t>(m1, 2);
    if (level >= 2) m2 = std::max<uint64_t>(m2, 2);
    if (m1 > cfg.max_samples || m2 > cfg.max_samples) {
        pr.capped = true;
        m1 = std::min(m1, cfg.max_samples);
        m2 = std::min(m2, cfg.max_samples);
    }
    BoostedRun run;
    run.n = n;
    run.level = level;
    run.m1 = m1;
    run.m2 = m2;
    run.coupling = coupling;
    run.layout = cfg.layout;
    run.seed = cfg.seed;
    run.workers = cfg.workers;
    run.use_control = cfg.control;
    run.control_beta = pr.pilot.control_beta;
    BoostedResult res = estimate_boosted(s, run);
    pr.estimate = res.total;
    pr.m1 = m1;
    pr.m2 = m2;
    pr.seconds = since(t0);
    return pr;
}

template <class F>
auto with_scheme(const ExperimentConfig& cfg, F&& f) {
    switch (cfg.model) {
        case ModelKind::cir: {
            CirScheme s(parse_cir_scheme(cfg.scheme), cfg.cir, cfg.maturity, cfg.cir_payoff);
            return f(s);
        }
        case ModelKind::heston: {
            HestonScheme s(parse_heston_scheme(cfg.scheme), cfg.heston, cfg.maturity, cfg.heston_payoff,
                           cfg.conditional);
            return f(s);
        }
        case ModelKind::multifactor: {
            MultifactorScheme s(cfg.heston, cfg.kernel, cfg.maturity, cfg.heston_payoff, cfg.conditional);
            return f(s);
        }
    }
    throw ConfigError("unknown model");
}

// Moments up to order 4 for the variance-of-variance column.
struct MomentAcc {
    uint64_t n = 0;
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    void add(double x) {
        double x2 = x * x;
        ++n;
        s1 += x;
        s2 += x2;
        s3 += x2 * x;
        s4 += x2 * x2;
    }
    void merge(const MomentAcc& o) {
        n += o.n;
        s1 += o.s1;
        s2 += o.s2;
        s3 += o.s3;
        s4 += o.s4;
    }
};

template <class Scheme>
VarianceRow variance_with(const Scheme& s, const ExperimentConfig& cfg, int n, int level, CouplingKind coupling) {
    using Noise = typename Scheme::Noise;
    auto t0 = Clock::now();
    uint64_t m = cfg.samples;
    if (m < 2) throw ConfigError("variance command needs samples >= 2");
    MomentAcc acc = run_chunked<MomentAcc>(0, m, cfg.workers, [&](uint64_t b, uint64_t e, MomentAcc& a) {
        Scheme sc = s;
        CoupledSimulator<Scheme> sim(sc, coupling);
        NoiseTree<Noise> tree;
        auto f = [&](const typename Scheme::State& st) { return sc.payoff(st); };
        for (uint64_t i = b; i < e; ++i) {
            Rng rng(cfg.seed, kStreamCorrection, i);
            GridPlan plan = draw_grid(n, level, rng);
            sim.build_tree(plan, rng, tree);
            auto cs = sim.simulate(plan, tree);
            double c = correction_value(cs, n, level, f);
            if (!std::isfinite(c)) throw NonFiniteSample(i, c);
            a.add(c);
        }
    });
    double N = static_cast<double>(acc.n);
    double mu = acc.s1 / N;
    double e2 = acc.s2 / N, e3 = acc.s3 / N, e4 = acc.s4 / N;
    double c2 = std::max(0.0, e2 - mu * mu);
    double c4 = e4 - 4.0 * mu * e3 + 6.0 * mu * mu * e2 - 3.0 * mu * mu * mu * mu;
    VarianceRow row;
    row.n = n;
    row.coupling = coupling;
    row.variance = c2 * N / (N - 1.0);
    row.half_width = 1.96 * std::sqrt(std::max(0.0, c4 - c2 * c2) / N);
    row.samples = m;
    row.seconds = since(t0);
    return row;
}

}  // namespace

CouplingKind parse_coupling(const std::string& s) {
    if (s == "standard" || s == "st") return CouplingKind::standard;
    if (s == "volatility_weighted" || s == "av" || s == "vol_weighted") return CouplingKind::volatility_weighted;
    throw ConfigError("unknown coupling '" + s + "'");
}

std::string to_string(CouplingKind c) { return c == CouplingKind::standard ? "standard" : "volatility_weighted"; }

void ExperimentConfig::validate() const {
    if (command != "converge" && command != "variance" && command != "pde")
        throw ConfigError("unknown command '" + command + "'");
    if (!(maturity > 0.0)) throw ConfigError("maturity must be > 0");
    if (n_list.empty()) throw ConfigError("n list is empty");
    for (int n : n_list)
        if (n < 1 || n > kMaxRefine) throw ConfigError("n values must lie in [1, 256]");
    if (levels.empty()) throw ConfigError("levels list is empty");
    for (int l : levels)
        if (l < 1 || l > 3) throw ConfigError("estimator level must be 1, 2 or 3");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (command == "variance" && samples < 2) throw ConfigError("variance command needs samples >= 2");
    if (command == "pde") {
        if (model != ModelKind::heston) throw ConfigError("pde command needs model = heston");
        if (pde_steps < 1 || !(pde_dx > 0.0)) throw ConfigError("pde steps/dx must be positive");
        heston.validate();
        if (!(heston.cir.sigma > 0.0)) throw ConfigError("pde needs sigma > 0");
        return;
    }
    if (command == "converge" && samples == 0 && !(epsilon > 0.0))
        throw ConfigError("converge needs samples > 0 or epsilon > 0");
    if (model == ModelKind::multifactor && scheme != "nv") throw ConfigError("multifactor model only has the nv scheme");
    // constructing the scheme runs every parameter and regime check
    with_scheme(*this, [](const auto&) { return 0; });
    if (control) {
        bool ok = with_scheme(*this, [](const auto& s) {
            if constexpr (HasControl<std::decay_t<decltype(s)>>)
                return s.has_control();
            else
                return false;
        });
        if (!ok) throw ConfigError("control variates are not available for this model/payoff");
    }
}

ExperimentConfig parse_config_string(const std::string& text, const std::string& origin) {
    toml::table root;
    try {
        root = toml::parse(text, origin);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "config parse error: " << e.description() << " (" << e.source().begin << ")";
        throw ConfigError(os.str());
    }
    check_keys(root, "root", {"experiment", "cir", "heston", "payoff", "kernel", "sampling", "pde"});
    ExperimentConfig c;
    if (auto* t = sub(root, "experiment")) {
        check_keys(*t, "experiment", {"name", "command", "model", "scheme", "levels", "n", "maturity", "reference"});
        c.name = get_or<std::string>(*t, "name", c.name);
        c.command = get_or<std::string>(*t, "command", c.command);
        c.model = parse_model(get_or<std::string>(*t, "model", "cir"));
        c.scheme = get_or<std::string>(*t, "scheme", c.scheme);
        c.levels = int_list(*t, "levels", c.levels);
        c.n_list = int_list(*t, "n", c.n_list);
        c.maturity = get_or<double>(*t, "maturity", c.maturity);
        const toml::node* ref = t->get("reference");
        if (ref) {
            if (auto v = ref->value<double>()) {
                std::ostringstream os;
                os.precision(17);
                os << *v;
                c.reference = os.str();
            } else {
                c.reference = get_or<std::string>(*t, "reference", c.reference);
            }
        }
    }
    if (auto* t = sub(root, "cir")) {
        check_keys(*t, "cir", {"a", "b", "sigma", "x0"});
        c.cir.a = get_or<double>(*t, "a", 0.0);
        c.cir.b = get_or<double>(*t, "b", 0.0);
        c.cir.sigma = get_or<double>(*t, "sigma", 1.0);
        c.cir.x0 = get_or<double>(*t, "x0", 0.0);
    }
    if (auto* t = sub(root, "heston")) {
        check_keys(*t, "heston", {"r", "delta", "rho", "s0", "y0", "a", "b", "sigma"});
        c.heston.r = get_or<double>(*t, "r", 0.0);
        c.heston.delta = get_or<double>(*t, "delta", 0.0);
        c.heston.rho = get_or<double>(*t, "rho", 0.0);
        double s0 = get_or<double>(*t, "s0", 100.0);
        if (!(s0 > 0.0)) throw ConfigError("s0 must be > 0");
        c.heston.x0 = std::log(s0);
        c.heston.cir.x0 = get_or<double>(*t, "y0", 0.0);
        c.heston.cir.a = get_or<double>(*t, "a", 0.0);
        c.heston.cir.b = get_or<double>(*t, "b", 0.0);
        c.heston.cir.sigma = get_or<double>(*t, "sigma", 1.0);
    }
    if (auto* t = sub(root, "payoff")) {
        check_keys(*t, "payoff", {"kind", "lambda", "power", "value", "strike"});
        std::string kind = get_or<std::string>(*t, "kind", c.model == ModelKind::cir ? "exp_neg" : "put");
        double value = get_or<double>(*t, "value", 0.0);
        if (c.model == ModelKind::cir) {
            if (kind == "exp_neg")
                c.cir_payoff.kind = CirPayoff::Kind::exp_neg;
            else if (kind == "power")
                c.cir_payoff.kind = CirPayoff::Kind::power;
            else if (kind == "constant")
                c.cir_payoff.kind = CirPayoff::Kind::constant;
            else
                throw ConfigError("unknown CIR payoff '" + kind + "'");
            c.cir_payoff.lambda = get_or<double>(*t, "lambda", 1.0);
            c.cir_payoff.power = get_or<int>(*t, "power", 1);
            c.cir_payoff.c = value;
        } else {
            if (kind == "put")
                c.heston_payoff.kind = HestonPayoff::Kind::put;
            else if (kind == "asian_put")
                c.heston_payoff.kind = HestonPayoff::Kind::asian_put;
            else if (kind == "constant")
                c.heston_payoff.kind = HestonPayoff::Kind::constant;
            else
                throw ConfigError("unknown payoff '" + kind + "'");
            c.heston_payoff.strike = get_or<double>(*t, "strike", 100.0);
            c.heston_payoff.c = value;
        }
    }
    if (auto* t = sub(root, "kernel")) {
        check_keys(*t, "kernel", {"nodes", "file"});
        std::string file = get_or<std::string>(*t, "file", "");
        std::string nodes = get_or<std::string>(*t, "nodes", "bl2");
        if (!file.empty())
            c.kernel = load_kernel_csv(file);
        else if (nodes == "bl2")
            c.kernel = bl2_nodes();
        else
            throw ConfigError("unknown kernel nodes '" + nodes + "'");
    } else if (c.model == ModelKind::multifactor) {
        c.kernel = bl2_nodes();
    }
    if (auto* t = sub(root, "sampling")) {
        check_keys(*t, "sampling", {"samples", "epsilon", "seed", "workers", "coupling", "layout", "conditional",
                                    "control", "pilot", "max_samples"});
        c.samples = get_or<uint64_t>(*t, "samples", 0);
        c.epsilon = get_or<double>(*t, "epsilon", 0.0);
        c.seed = get_or<uint64_t>(*t, "seed", 1);
        c.workers = get_or<int>(*t, "workers", 1);
        c.pilot = get_or<uint64_t>(*t, "pilot", c.pilot);
        c.max_samples = get_or<uint64_t>(*t, "max_samples", c.max_samples);
        c.conditional = get_or<bool>(*t, "conditional", false);
        c.control = get_or<bool>(*t, "control", false);
        if (const toml::node* cn = t->get("coupling")) {
            c.couplings.clear();
            if (auto v = cn->value<std::string>()) {
                c.couplings.push_back(parse_coupling(*v));
            } else if (auto* arr = cn->as_array()) {
                for (const auto& e : *arr) {
                    auto v = e.value<std::string>();
                    if (!v) throw ConfigError("coupling list must hold strings");
                    c.couplings.push_back(parse_coupling(*v));
                }
            } else {
                throw ConfigError("bad coupling value");
            }
            if (c.couplings.empty()) throw ConfigError("coupling list is empty");
        }
        std::string layout = get_or<std::string>(*t, "layout", "shared");
        if (layout == "shared")
            c.layout = SampleLayout::shared;
        else if (layout == "independent")
            c.layout = SampleLayout::independent;
        else
            throw ConfigError("unknown layout '" + layout + "'");
    }
    if (auto* t = sub(root, "pde")) {
        check_keys(*t, "pde", {"steps", "dx", "half"});
        c.pde_steps = get_or<int>(*t, "steps", c.pde_steps);
        c.pde_dx = get_or<double>(*t, "dx", c.pde_dx);
        c.pde_half = get_or<int>(*t, "half", c.pde_half);
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_string(ss.str(), path);
}

PointResult run_point(const ExperimentConfig& cfg, int n, int level, double hw95) {
    CouplingKind coupling = cfg.couplings.front();
    return with_scheme(cfg, [&](const auto& s) { return run_with(s, cfg, n, level, coupling, hw95); });
}

std::optional<double> reference_value(const ExperimentConfig& cfg) {
    if (cfg.reference == "none" || cfg.reference == "self") return std::nullopt;
    if (cfg.reference != "auto") {
        try {
            return std::stod(cfg.reference);
        } catch (const std::exception&) {
            throw ConfigError("reference must be auto, none, self or a number");
        }
    }
    const double T = cfg.maturity;
    switch (cfg.model) {
        case ModelKind::cir:
            switch (cfg.cir_payoff.kind) {
                case CirPayoff::Kind::exp_neg: return cir_laplace(cfg.cir_payoff.lambda, T, cfg.cir.x0, cfg.cir);
                case CirPayoff::Kind::power: return moment_exact(cfg.cir_payoff.power, T, cfg.cir.x0, cfg.cir);
                case CirPayoff::Kind::constant: return cfg.cir_payoff.c;
            }
            break;
        case ModelKind::heston:
            if (cfg.heston_payoff.kind == HestonPayoff::Kind::put)
                return heston_put_fourier(cfg.heston, PutSpec{cfg.heston_payoff.strike, T});
            if (cfg.heston_payoff.kind == HestonPayoff::Kind::constant) return cfg.heston_payoff.c;
            return std::nullopt;
        case ModelKind::multifactor:
            if (cfg.heston_payoff.kind == HestonPayoff::Kind::put)
                return mf_put_fourier(cfg.heston, cfg.kernel, PutSpec{cfg.heston_payoff.strike, T});
            if (cfg.heston_payoff.kind == HestonPayoff::Kind::constant) return cfg.heston_payoff.c;
            return std::nullopt;
    }
    return std::nullopt;
}

ConvergeOutput cmd_converge(const ExperimentConfig& cfg) {
    cfg.validate();
    auto t0 = Clock::now();
    ConvergeOutput out;
    out.self_difference = cfg.reference == "self";
    out.reference = reference_value(cfg);
    std::vector<int> ns = cfg.n_list;
    if (out.self_difference) {
        std::set<int> all(ns.begin(), ns.end());
        for (int n : cfg.n_list) all.insert(2 * n);
        ns.assign(all.begin(), all.end());
    }
    for (int level : cfg.levels) {
        ConvergeLevel lvl;
        lvl.level = level;
        std::map<int, double> value;
        for (int n : ns) {
            lvl.points.push_back(run_point(cfg, n, level));
            value[n] = lvl.points.back().estimate.value;
        }
        if (out.self_difference) {
            for (int n : cfg.n_list) lvl.errors.emplace_back(n, value[2 * n] - value[n]);
        } else if (out.reference) {
            for (int n : ns) lvl.errors.emplace_back(n, value[n] - *out.reference);
        }
        if (lvl.errors.size() >= 2) {
            std::vector<std::pair<double, double>> abs_err;
            for (auto [n, e] : lvl.errors) abs_err.emplace_back(n, std::fabs(e));
            lvl.slope = regress_slope(abs_err);
        }
        out.levels.push_back(std::move(lvl));
    }
    out.seconds = since(t0);
    return out;
}

std::vector<VarianceRow> cmd_variance(const ExperimentConfig& cfg) {
    cfg.validate();
    int level = std::max(2, cfg.levels.front());
    std::vector<VarianceRow> rows;
    for (int n : cfg.n_list)
        for (CouplingKind c : cfg.couplings)
            rows.push_back(with_scheme(cfg, [&](const auto& s) { return variance_with(s, cfg, n, level, c); }));
    return rows;
}

PdeOutput cmd_pde(const ExperimentConfig& cfg) {
    cfg.validate();
    auto t0 = Clock::now();
    const HestonParams& p = cfg.heston;
    const double T = cfg.maturity;
    PdeOutput out;
    double y0 = p.cir.x0;
    auto [x0, y] = transform_initial(std::exp(p.x0), y0, p);
    XGrid grid{x0, cfg.pde_dx, cfg.pde_half > 0 ? cfg.pde_half : hybrid_auto_half(p, T, cfg.pde_dx)};
    HybridLattice lat = build_lattice(y, p.cir, cfg.pde_steps, T);
    const HestonPayoff f = cfg.heston_payoff;
    std::function<double(double, double)> payoff;
    switch (f.kind) {
        case HestonPayoff::Kind::put:
            payoff = [&](double x, double yy) { return std::max(0.0, f.strike - transform_back(x, yy, p)); };
            break;
        case HestonPayoff::Kind::constant: payoff = [&](double, double) { return f.c; }; break;
        default: throw ConfigError("pde command supports put and constant payoffs");
    }
    out.surface = backward_sweep(lat, p, grid, payoff, cfg.workers);
    double disc = std::exp(-p.r * T);
    for (double& v : out.surface.values) v *= disc;
    out.surface.at_center *= disc;
    out.price = out.surface.at_center;
    if (f.kind == HestonPayoff::Kind::put && cfg.reference != "none")
        out.reference = heston_put_fourier(p, PutSpec{f.strike, T});
    out.seconds = since(t0);
    return out;
}

void write_converge_csv(std::ostream& os, const ConvergeLevel& lvl) {
    os << "n,estimate,variance,half_width,samples,wallclock_s\n";
    char buf[256];
    for (const auto& p : lvl.points) {
        std::snprintf(buf, sizeof buf, "%d,%.12g,%.6g,%.6g,%llu,%.3f\n", p.n, p.estimate.value, p.estimate.variance,
                      p.estimate.half_width_95, static_cast<unsigned long long>(p.estimate.n_samples), p.seconds);
        os << buf;
    }
}

void write_variance_csv(std::ostream& os, const std::vector<VarianceRow>& rows) {
    os << "n,coupling,variance,half_width,samples,wallclock_s\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%s,%.8g,%.4g,%llu,%.3f\n", r.n, to_string(r.coupling).c_str(), r.variance,
                      r.half_width, static_cast<unsigned long long>(r.samples), r.seconds);
        os << buf;
    }
}

void write_pde_csv(std::ostream& os, const PdeOutput& out, const ExperimentConfig& cfg) {
    os << "x,spot,price\n";
    char buf[128];
    const auto& g = out.surface.grid;
    double y0 = cfg.heston.cir.x0;
    for (int j = 0; j < g.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.6f,%.8g,%.10g\n", g.at(j), transform_back(g.at(j), y0, cfg.heston),
                      out.surface.values[j]);
        os << buf;
    }
}

namespace {

nlohmann::json config_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["command"] = cfg.command;
    j["model"] = to_string(cfg.model);
    j["scheme"] = cfg.scheme;
    j["seed"] = cfg.seed;
    j["n"] = cfg.n_list;
    j["levels"] = cfg.levels;
    return j;
}

}  // namespace

std::string converge_summary_json(const ExperimentConfig& cfg, const ConvergeOutput& out) {
    nlohmann::json j;
    j["experiment"] = cfg.name;
    j["config"] = config_json(cfg);
    if (out.reference)
        j["reference"] = *out.reference;
    else
        j["reference"] = nullptr;
    j["mode"] = out.self_difference ? "self_difference" : (out.reference ? "reference" : "estimates");
    nlohmann::json values = nlohmann::json::object(), slopes = nlohmann::json::object(),
                   runtimes = nlohmann::json::object();
    for (const auto& lvl : out.levels) {
        std::string key = "nu" + std::to_string(lvl.level);
        nlohmann::json arr = nlohmann::json::array();
        double total = 0.0;
        for (const auto& p : lvl.points) {
            nlohmann::json e;
            e["n"] = p.n;
            e["estimate"] = p.estimate.value;
            e["half_width"] = p.estimate.half_width_95;
            e["m1"] = p.m1;
            e["m2"] = p.m2;
            if (p.capped) e["capped"] = true;
            arr.push_back(e);
            total += p.seconds;
        }
        values[key] = arr;
        runtimes[key] = total;
        if (!lvl.errors.empty()) {
            nlohmann::json errs = nlohmann::json::array();
            for (auto [n, e] : lvl.errors) errs.push_back({{"n", n}, {"error", e}});
            values[key + "_errors"] = errs;
        }
        if (lvl.slope) {
            slopes[key] = {{"slope", lvl.slope->slope},
                           {"intercept", lvl.slope->intercept},
                           {"residual", lvl.slope->residual},
                           {"dropped", lvl.slope->dropped}};
        }
    }
    j["values"] = values;
    j["slopes"] = slopes;
    runtimes["total"] = out.seconds;
    j["runtimes"] = runtimes;
    return j.dump(2);
}

std::string variance_summary_json(const ExperimentConfig& cfg, const std::vector<VarianceRow>& rows) {
    nlohmann::json j;
    j["experiment"] = cfg.name;
    j["config"] = config_json(cfg);
    nlohmann::json values = nlohmann::json::array();
    double total = 0.0;
    for (const auto& r : rows) {
        values.push_back({{"n", r.n},
                          {"coupling", to_string(r.coupling)},
                          {"variance", r.variance},
                          {"half_width", r.half_width},
                          {"samples", r.samples}});
        total += r.seconds;
    }
    j["values"] = values;
    j["slopes"] = nlohmann::json::object();
    j["runtimes"] = {{"total", total}};
    return j.dump(2);
}

std::string pde_summary_json(const ExperimentConfig& cfg, const PdeOutput& out) {
    nlohmann::json j;
    j["experiment"] = cfg.name;
    j["config"] = config_json(cfg);
    j["values"] = {{"price", out.price}, {"steps", cfg.pde_steps}, {"dx", cfg.pde_dx},
                   {"grid_points", out.surface.grid.size()}};
    if (out.reference) {
        j["values"]["reference"] = *out.reference;
        j["values"]["relative_error"] = out.price / *out.reference - 1.0;
    }
    j["slopes"] = nlohmann::json::object();
    j["runtimes"] = {{"total", out.seconds}};
    return j.dump(2);
}

}  // namespace wb
