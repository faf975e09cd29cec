#include "config.hpp"

#include "mcre/error.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace mcre::cli {

ConfigError::ConfigError(std::string field, int line, const std::string& what)
    : std::runtime_error(what), field_(std::move(field)), line_(line) {}

namespace {

using json = nlohmann::ordered_json;

bool present(const YAML::Node& n) { return n.IsDefined() && !n.IsNull(); }

int line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }

/// Typed access to one YAML mapping. Every key read is recorded (with its
/// resolved value) so finish() can reject the keys nobody asked for.
class Section {
public:
    Section(YAML::Node node, std::string path, json& out) : node_(std::move(node)), path_(std::move(path)), out_(out) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) fail("", node_, "must be a mapping");
        out_ = json::object();
    }

    bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

    double real(const std::string& key, std::optional<double> def = std::nullopt) {
        const auto n = get(key, def.has_value());
        double v = def.value_or(0.0);
        if (present(n)) v = convert<double>(key, n, "a number");
        if (!std::isfinite(v)) fail(key, n, "must be finite");
        out_[key] = v;
        return v;
    }

    std::uint64_t count(const std::string& key, std::optional<std::uint64_t> def = std::nullopt) {
        const auto n = get(key, def.has_value());
        std::uint64_t v = def.value_or(0);
        if (present(n)) {
            const auto s = convert<std::string>(key, n, "a non-negative integer");
            if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
                fail(key, n, "must be a non-negative integer");
            v = convert<std::uint64_t>(key, n, "a non-negative integer");
        }
        out_[key] = v;
        return v;
    }

    bool flag(const std::string& key, bool def) {
        const auto n = get(key, true);
        const bool v = present(n) ? convert<bool>(key, n, "true or false") : def;
        out_[key] = v;
        return v;
    }

    std::string text(const std::string& key, std::optional<std::string> def = std::nullopt,
                     const std::vector<std::string>& choices = {}) {
        const auto n = get(key, def.has_value());
        std::string v = present(n) ? convert<std::string>(key, n, "a string") : *def;
        if (!choices.empty() && std::find(choices.begin(), choices.end(), v) == choices.end()) {
            std::string list;
            for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
            fail(key, present(n) ? n : node_, "must be one of: " + list + " (got '" + v + "')");
        }
        out_[key] = v;
        return v;
    }

    Expression expression(const std::string& key, std::optional<std::string> def = std::nullopt) {
        const auto n = get(key, def.has_value());
        const std::string src = present(n) ? convert<std::string>(key, n, "an expression") : *def;
        out_[key] = src;
        return parse_expression(key, present(n) ? n : node_, src);
    }

    std::vector<Expression> expressions(const std::string& key, bool required) {
        const auto n = get(key, !required);
        std::vector<Expression> out;
        out_[key] = json::array();
        if (!present(n)) return out;
        if (!n.IsSequence()) fail(key, n, "must be a list of expressions");
        for (const auto& item : n) {
            const auto src = convert<std::string>(key, item, "an expression");
            out_[key].push_back(src);
            out.push_back(parse_expression(key, item, src));
        }
        return out;
    }

    std::vector<double> reals(const std::string& key, std::optional<std::vector<double>> def = std::nullopt) {
        const auto n = get(key, def.has_value());
        std::vector<double> v = def.value_or(std::vector<double>{});
        if (present(n)) {
            v.clear();
            if (n.IsScalar()) {
                v.push_back(convert<double>(key, n, "a number"));
            } else if (n.IsSequence()) {
                for (const auto& item : n) v.push_back(convert<double>(key, item, "a number"));
            } else {
                fail(key, n, "must be a number or a list of numbers");
            }
        }
        for (double d : v)
            if (!std::isfinite(d)) fail(key, n, "must hold finite numbers");
        out_[key] = v;
        return v;
    }

    std::vector<std::size_t> counts(const std::string& key, std::optional<std::vector<std::size_t>> def = std::nullopt) {
        const auto n = get(key, def.has_value());
        std::vector<std::size_t> v = def.value_or(std::vector<std::size_t>{});
        if (present(n)) {
            v.clear();
            if (!n.IsSequence()) fail(key, n, "must be a list of non-negative integers");
            for (const auto& item : n) {
                const auto s = convert<std::string>(key, item, "a non-negative integer");
                if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
                    fail(key, item, "must hold non-negative integers");
                v.push_back(convert<std::size_t>(key, item, "a non-negative integer"));
            }
        }
        out_[key] = v;
        return v;
    }

    /// A list of points; scalars stand for one-coordinate points.
    std::vector<Point> points(const std::string& key, std::optional<std::vector<Point>> def = std::nullopt) {
        const auto n = get(key, def.has_value());
        std::vector<Point> v = def.value_or(std::vector<Point>{});
        if (present(n)) {
            v.clear();
            if (!n.IsSequence()) fail(key, n, "must be a list");
            for (const auto& item : n) {
                Point p;
                if (item.IsScalar()) {
                    p.push_back(convert<double>(key, item, "a number"));
                } else if (item.IsSequence()) {
                    for (const auto& c : item) p.push_back(convert<double>(key, c, "a number"));
                } else {
                    fail(key, item, "entries must be numbers or lists of numbers");
                }
                v.push_back(std::move(p));
            }
        }
        out_[key] = v;
        return v;
    }

    Matrix matrix(const std::string& key) { return to_matrix(key, get(key, false), out_[key]); }

    std::vector<Matrix> matrices(const std::string& key) {
        const auto n = get(key, false);
        if (!n.IsSequence()) fail(key, n, "must be a list of matrices");
        std::vector<Matrix> out;
        out_[key] = json::array();
        for (const auto& item : n) {
            json j;
            out.push_back(to_matrix(key, item, j));
            out_[key].push_back(j);
        }
        return out;
    }

    Section child(const std::string& key) {
        const auto n = get(key, true);
        used_.insert(key);
        return Section(n, path_ + "." + key, out_[key]);
    }

    void finish() const {
        if (!node_ || !node_.IsMap()) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!used_.count(key))
                throw ConfigError(path_ + "." + key, line_of(kv.first),
                                  "unknown key '" + key + "' in section '" + path_ + "'");
        }
    }

    [[noreturn]] void fail(const std::string& key, const YAML::Node& n, const std::string& what) const {
        const std::string field = key.empty() ? path_ : path_ + "." + key;
        throw ConfigError(field, present(n) ? line_of(n) : line_of(node_), field + " " + what);
    }

    const std::string& path() const { return path_; }
    int line() const { return line_of(node_); }

private:
    YAML::Node get(const std::string& key, bool optional) {
        used_.insert(key);
        if (has(key)) {
            YAML::Node n = node_[key];
            if (!n.IsNull()) return n;
        }
        if (!optional) fail(key, node_, "is required");
        return YAML::Node();
    }

    template <class T>
    T convert(const std::string& key, const YAML::Node& n, const char* what) const {
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            fail(key, n, std::string("must be ") + what);
        }
    }

    Expression parse_expression(const std::string& key, const YAML::Node& n, const std::string& src) const {
        try {
            return Expression::parse(src);
        } catch (const ExpressionError& e) {
            fail(key, n, std::string("has an invalid expression: ") + e.what());
        }
    }

    Matrix to_matrix(const std::string& key, const YAML::Node& n, json& echo) const {
        if (!present(n) || !n.IsSequence() || n.size() == 0) fail(key, n, "must be a non-empty list of rows");
        const std::size_t rows = n.size();
        const std::size_t cols = n[0].IsSequence() ? n[0].size() : 0;
        if (cols == 0) fail(key, n, "rows must be non-empty lists of numbers");
        Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        echo = json::array();
        for (std::size_t i = 0; i < rows; ++i) {
            const auto row = n[i];
            if (!row.IsSequence() || row.size() != cols) fail(key, row, "rows must all have the same length");
            std::vector<double> r;
            for (std::size_t j = 0; j < cols; ++j) {
                r.push_back(convert<double>(key, row[j], "a number"));
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.back();
            }
            echo.push_back(r);
        }
        return m;
    }

    YAML::Node node_;
    std::string path_;
    json& out_;
    std::set<std::string> used_;
};

EnvironmentSpec read_environment(Section& s) {
    const auto kind = s.text("kind", std::nullopt, {"iid", "gaussian-ar1", "finite-markov", "deterministic-cycle", "constant"});
    EnvironmentSpec spec;
    if (kind == "iid") {
        const auto dist = s.text("distribution", "normal", {"normal", "uniform", "lognormal", "categorical"});
        if (dist == "categorical") {
            spec = EnvironmentSpec::iid_categorical(s.reals("probabilities"));
        } else {
            const auto dim = s.count("dim", 1);
            if (dist == "uniform") {
                const double lo = s.real("lower", 0.0), hi = s.real("upper", 1.0);
                spec = EnvironmentSpec::iid_uniform(lo, hi, dim);
            } else {
                const double loc = s.real("location", 0.0), scale = s.real("scale", 1.0);
                spec = dist == "normal" ? EnvironmentSpec::iid_normal(loc, scale, dim)
                                        : EnvironmentSpec::iid_lognormal(loc, scale, dim);
            }
        }
    } else if (kind == "gaussian-ar1") {
        const double phi = s.real("phi"), sigma = s.real("sigma", 1.0), mean = s.real("mean", 0.0);
        spec = EnvironmentSpec::gaussian_ar1(phi, sigma, mean, s.count("dim", 1));
    } else if (kind == "finite-markov") {
        const Matrix T = s.matrix("transition");
        std::optional<std::size_t> initial;
        if (s.has("initial")) initial = s.count("initial");
        spec = EnvironmentSpec::finite_markov(T, initial);
    } else if (kind == "deterministic-cycle") {
        spec = EnvironmentSpec::deterministic_cycle(s.points("values"));
        spec.random_phase = s.flag("random_phase", false);
    } else {
        spec = EnvironmentSpec::constant(s.reals("value"));
    }
    spec.ergodic = s.flag("ergodic", true);
    spec.mixing = s.flag("mixing", true);
    try {
        spec.validate();
    } catch (const mcre::Error& e) {
        throw ConfigError(s.path(), s.line(), std::string(s.path()) + ": " + e.what());
    }
    return spec;
}

ScalarFn scalar_fn(const Expression& e) {
    return [e](PointView x) { return e(x); };
}

void check_arity(const Section& s, const std::string& key, const Expression& e, std::size_t x_dim, std::size_t y_dim) {
    if (e.x_arity() > x_dim)
        throw ConfigError(s.path() + "." + key, s.line(),
                          s.path() + "." + key + " uses x" + std::to_string(e.x_arity()) + " but the environment has dimension " + std::to_string(x_dim));
    if (e.y_arity() > y_dim)
        throw ConfigError(s.path() + "." + key, s.line(),
                          s.path() + "." + key + " uses y" + std::to_string(e.y_arity()) + " but only " + std::to_string(y_dim) + " state coordinates exist");
}

models::NoiseSpec read_noise(Section& s) {
    const auto family = s.text("family", "gaussian", {"gaussian", "laplace", "student-t"});
    const double scale = s.real("scale", 1.0);
    models::NoiseSpec n = family == "gaussian" ? models::NoiseSpec::gaussian(scale)
                          : family == "laplace" ? models::NoiseSpec::laplace(scale)
                                                : models::NoiseSpec::student_t(s.real("df"), scale);
    s.finish();
    return n;
}

models::ModelBundle read_model(Section& s, const EnvironmentSpec& env, std::string& kind) {
    kind = s.text("kind", std::nullopt, {"tarx", "rca", "farx", "finite"});
    const std::size_t d = env.state_dim;
    try {
        if (kind == "finite") {
            auto mats = s.matrices("matrices");
            models::FiniteOptions o;
            o.V = s.reals("V", std::vector<double>{});
            if (const auto chain = finite_chain(env)) {
                for (const auto& v : chain->values) {
                    if (v.empty() || v[0] < -0.5 || label_of(v) >= mats.size())
                        throw ConfigError(s.path() + ".matrices", s.line(),
                                          "model.matrices has " + std::to_string(mats.size()) +
                                              " matrices but the environment takes the value " + std::to_string(v[0]));
                }
            }
            return models::make_finite(std::move(mats), o);
        }
        auto noise_section = s.child("noise");
        const auto noise = read_noise(noise_section);
        const double R = s.real("R", 1.0);
        if (kind == "farx") {
            const auto coeffs = s.expressions("coefficients", true);
            if (coeffs.empty()) throw ConfigError(s.path() + ".coefficients", s.line(), "model.coefficients must not be empty");
            const auto env_exprs = s.expressions("envelopes", false);
            const std::size_t p = coeffs.size();
            for (const auto& c : coeffs) check_arity(s, "coefficients", c, d, p);
            for (const auto& c : env_exprs) check_arity(s, "envelopes", c, d, 0);
            models::FarxOptions o;
            for (const auto& c : env_exprs) o.envelopes.push_back(scalar_fn(c));
            o.lag_box = s.real("lag_box", 10.0);
            o.grid_points = s.count("grid_points", 21);
            o.block = s.count("block", p);
            o.default_R = R;
            std::vector<models::FarxCoefficient> a;
            for (const auto& c : coeffs) a.push_back([c](PointView x, PointView lags) { return c(x, lags); });
            return models::make_farx(std::move(a), noise, o);
        }
        const auto mode = s.text("eta_mode", "tight", {"tight", "strict"}) == "tight" ? models::EtaMode::kTight
                                                                                       : models::EtaMode::kStrict;
        if (kind == "rca") {
            const auto a = s.expression("a");
            check_arity(s, "a", a, d, 0);
            return models::make_rca(scalar_fn(a), noise, mode, R);
        }
        models::TarxCoefficients c;
        const char* keys[] = {"a1", "b1", "a2", "b2", "r"};
        const char* defaults[] = {nullptr, "0", nullptr, "0", "0"};
        ScalarFn* slots[] = {&c.a1, &c.b1, &c.a2, &c.b2, &c.r};
        for (int i = 0; i < 5; ++i) {
            const auto e = defaults[i] ? s.expression(keys[i], std::string(defaults[i])) : s.expression(keys[i]);
            check_arity(s, keys[i], e, d, 0);
            *slots[i] = scalar_fn(e);
        }
        return models::make_tarx(c, noise, mode, R);
    } catch (const mcre::ConfigurationError& e) {
        throw ConfigError(s.path(), s.line(), std::string("model: ") + e.what());
    }
}

void check_point(const Section& s, const std::string& key, const Point& p, std::size_t width) {
    if (!p.empty() && p.size() != width)
        throw ConfigError(s.path() + "." + key, s.line(),
                          s.path() + "." + key + " must have " + std::to_string(width) + " coordinate(s)");
}

void check_ns(const Section& s, const std::string& key, const std::vector<std::size_t>& ns) {
    if (ns.empty()) throw ConfigError(s.path() + "." + key, s.line(), s.path() + "." + key + " must not be empty");
    if (!std::is_sorted(ns.begin(), ns.end()) || std::adjacent_find(ns.begin(), ns.end()) != ns.end())
        throw ConfigError(s.path() + "." + key, s.line(), s.path() + "." + key + " must be strictly increasing");
}

void check_positive(const Section& s, const std::string& key, double v) {
    if (!(v > 0.0)) throw ConfigError(s.path() + "." + key, s.line(), s.path() + "." + key + " must be positive");
}

void read_experiment(Section& s, const std::string& which, Config& c) {
    const auto& b = *c.model;
    const std::size_t width = b.kernel.state_space().point_size();
    const Point origin(width, 0.0);
    if (which == "simulate") {
        auto& p = c.simulate;
        p.steps = s.count("steps", 100);
        const std::size_t sim_width = b.one_step ? b.one_step->state_space().point_size() : width;
        p.start = s.reals("start", Point(sim_width, 0.0));
        check_point(s, "start", p.start, sim_width);
    } else if (which == "couple") {
        auto& p = c.couple;
        p.ns = s.counts("ns", std::vector<std::size_t>{10, 20, 40, 80});
        check_ns(s, "ns", p.ns);
        p.replicas = s.count("replicas", 10000);
        check_positive(s, "replicas", double(p.replicas));
        p.z = s.reals("z", Point(width, b.kernel.state_space().kind == StateSpaceKind::kFinite ? 0.0 : 1.0));
        p.z_bar = s.reals("z_bar", Point(width, b.kernel.state_space().kind == StateSpaceKind::kFinite ? 1.0 : -1.0));
        check_point(s, "z", p.z, width);
        check_point(s, "z_bar", p.z_bar, width);
        p.schedule = s.text("schedule", "fixed-level", {"fixed-level", "good-times"});
        p.R = s.real("R", b.default_R);
        check_positive(s, "R", p.R);
        p.eta_min = s.real("eta_min", 0.0);
        p.burn_in = s.count("burn_in", 1000);
        p.C1_max = s.count("C1_max", 1000);
        p.C2_max = s.count("C2_max", 1'000'000'000'000'000ULL);
    } else if (which == "backward") {
        auto& p = c.backward;
        p.ns = s.counts("ns", std::vector<std::size_t>{1, 2, 5, 10, 20, 50});
        check_ns(s, "ns", p.ns);
        const bool finite = b.kernel.state_space().kind == StateSpaceKind::kFinite;
        p.z = s.reals("z", Point(width, finite ? 0.0 : 1.0));
        p.z_prime = s.reals("z_prime", Point(width, finite ? double(b.kernel.state_space().dim - 1) : -1.0));
        check_point(s, "z", p.z, width);
        check_point(s, "z_prime", p.z_prime, width);
        p.mode = s.text("mode", b.kernel.has_matrix() ? "exact" : "coupling", {"exact", "coupling"});
        if (p.mode == "exact" && !b.kernel.has_matrix())
            throw ConfigError(s.path() + ".mode", s.line(), "experiment.backward.mode 'exact' needs a finite model");
        p.replicas = s.count("replicas", 10000);
        check_positive(s, "replicas", double(p.replicas));
        p.R = s.real("R", b.default_R);
        check_positive(s, "R", p.R);
    } else if (which == "check") {
        auto& p = c.check;
        p.xs = s.points("x", std::vector<Point>{});
        p.ys = s.points("y", std::vector<Point>{});
        const std::size_t tuple = b.drift.p * c.environment.state_dim;
        for (const auto& x : p.xs) check_point(s, "x", x, tuple);
        for (const auto& y : p.ys) check_point(s, "y", y, width);
        p.n_mc = s.count("n_mc", 10000);
        if (!b.kernel.has_matrix() && p.n_mc < 1000)
            throw ConfigError(s.path() + ".n_mc", s.line(), "experiment.check.n_mc must be at least 1000 for sampled kernels");
        p.n = s.count("n", 10000);
        if (p.n < 4) throw ConfigError(s.path() + ".n", s.line(), "experiment.check.n must be at least 4");
        p.R = s.real("R", b.default_R);
        check_positive(s, "R", p.R);
    } else if (which == "goodtimes") {
        auto& p = c.goodtimes;
        p.n = s.count("n", 10000);
        check_positive(s, "n", double(p.n));
        p.burn_in = s.count("burn_in", 20000);
        p.C1_max = s.count("C1_max", 1000);
        p.C2_max = s.count("C2_max", 1'000'000'000'000'000ULL);
        if (s.has("C1") || s.has("C2")) {
            p.C1 = s.count("C1");
            p.C2 = s.count("C2");
        }
    } else if (which == "lyapunov") {
        auto& p = c.lyapunov;
        p.n = s.count("n", 10000);
        check_positive(s, "n", double(p.n));
        p.norm = s.text("norm", "l1", {"l1", "linf", "frobenius"});
    } else if (which == "lln") {
        auto& p = c.lln;
        const std::size_t lln_width = b.one_step ? b.one_step->state_space().point_size() : width;
        p.n = s.count("n", 10000);
        check_positive(s, "n", double(p.n));
        p.n_backward = s.count("n_backward", 1000);
        p.f = s.expression("f", "y");
        check_arity(s, "f", p.f, 0, lln_width);
        std::vector<std::size_t> cps;
        for (std::size_t m = 10; m < p.n; m *= 10) cps.push_back(m);
        cps.push_back(p.n);
        p.checkpoints = s.counts("checkpoints", cps);
        for (auto cp : p.checkpoints)
            if (cp < 1 || cp > p.n) throw ConfigError(s.path() + ".checkpoints", s.line(), "experiment.lln.checkpoints must lie in [1, n]");
        p.z = s.reals("z", Point(lln_width, 0.0));
        check_point(s, "z", p.z, lln_width);
    }
    s.finish();
}

}  // namespace

Config load_config(const std::string& path, const std::string& subcommand, std::optional<std::uint64_t> seed_override) {
    if (std::find(kSubcommands.begin(), kSubcommands.end(), subcommand) == kSubcommands.end())
        throw ConfigError("subcommand", 0, "unknown subcommand '" + subcommand + "'");
    YAML::Node root;
    try {
        root = YAML::LoadFile(path);
    } catch (const YAML::BadFile&) {
        throw ConfigError("config", 0, "cannot read config file '" + path + "'");
    } catch (const YAML::ParserException& e) {
        throw ConfigError("config", e.mark.line + 1, std::string("YAML syntax error: ") + e.msg);
    }
    if (!root.IsMap()) throw ConfigError("config", 1, "config must be a mapping with sections environment, model, experiment");

    Config c;
    c.subcommand = subcommand;
    json resolved = json::object();
    json discard;
    Section top(root, "config", discard);

    c.seed = top.count("seed", 0);
    if (seed_override) c.seed = *seed_override;

    {
        auto s = top.child("environment");
        if (!top.has("environment")) throw ConfigError("environment", 0, "section 'environment' is required");
        c.environment = read_environment(s);
        s.finish();
        resolved["environment"] = discard["environment"];
    }
    {
        auto s = top.child("model");
        if (!top.has("model")) throw ConfigError("model", 0, "section 'model' is required");
        c.model.emplace(read_model(s, c.environment, c.model_kind));
        s.finish();
        resolved["model"] = discard["model"];
    }
    {
        auto exp = top.child("experiment");
        for (const auto& name : kSubcommands) {
            if (!exp.has(name)) continue;
            auto s = exp.child(name);
            read_experiment(s, name, c);
        }
        // Defaults for the active subcommand when its subsection is absent.
        if (!exp.has(subcommand)) {
            json tmp;
            Section s(YAML::Node(), "experiment." + subcommand, tmp);
            read_experiment(s, subcommand, c);
            discard["experiment"][subcommand] = tmp;
        }
        exp.finish();
        resolved["experiment"] = json::object();
        resolved["experiment"][subcommand] = discard["experiment"][subcommand];
    }
    {
        auto s = top.child("output");
        c.output_prefix = s.text("prefix", "");
        s.finish();
        resolved["output"] = discard["output"];
    }
    top.finish();
    c.resolved = json::object();
    c.resolved["seed"] = c.seed;
    for (auto& [k, v] : resolved.items()) c.resolved[k] = v;
    return c;
}

}  // namespace mcre::cli
