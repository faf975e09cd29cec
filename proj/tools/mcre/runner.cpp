#include "runner.hpp"

#include "mcre/conditions.hpp"
#include "mcre/coupling.hpp"
#include "mcre/error.hpp"
#include "mcre/goodtimes.hpp"
#include "mcre/stationary.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace mcre::cli {

namespace {

using json = nlohmann::ordered_json;

// Substreams of the master seed.
constexpr std::uint64_t kEnvironmentTag = 0;
constexpr std::uint64_t kChainTag = 1;

std::uint64_t env_seed(const Config& c) { return derive_seed(c.seed, kEnvironmentTag); }
std::uint64_t chain_seed(const Config& c) { return derive_seed(c.seed, kChainTag); }

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : columns_(header.size()) {
        for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
        text_ += '\n';
    }

    void row(const std::vector<double>& values) {
        if (values.size() != columns_) throw ArgumentError("cli", "CSV row width does not match the header");
        for (std::size_t i = 0; i < values.size(); ++i) text_ += (i ? "," : "") + format_number(values[i]);
        text_ += '\n';
    }

    const std::string& text() const { return text_; }

private:
    std::size_t columns_;
    std::string text_;
};

class Writer {
public:
    Writer(const Config& c, const RunOptions& o) : config_(c), options_(o) {}

    void csv(const std::string& suffix, const Csv& table) { write(config_.output_prefix + config_.subcommand + suffix + ".csv", table.text()); }

    void summary(json results) {
        json doc;
        doc["schema_version"] = kSchemaVersion;
        doc["subcommand"] = config_.subcommand;
        doc["model"] = config_.model->name;
        doc["config"] = config_.resolved;
        doc["results"] = std::move(results);
        write(config_.output_prefix + config_.subcommand + ".json", doc.dump(2) + "\n");
    }

    std::vector<std::filesystem::path> written() const { return written_; }

private:
    void write(const std::string& name, const std::string& text) {
        const auto path = options_.out_dir / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << text;
        out.close();
        if (!out) throw Error("cli", "cannot write output file " + path.string());
        written_.push_back(path);
    }

    const Config& config_;
    const RunOptions& options_;
    std::vector<std::filesystem::path> written_;
};

/// Column names: "name" for one coordinate, name1..namek otherwise.
void add_columns(std::vector<std::string>& header, const std::string& name, std::size_t width) {
    if (width == 1) {
        header.push_back(name);
        return;
    }
    for (std::size_t i = 1; i <= width; ++i) header.push_back(name + std::to_string(i));
}

/// Kernel driven by single environment values: the one-step kernel when the
/// bundle is a skeleton, the bundle kernel otherwise.
const KernelFamily& step_kernel(const models::ModelBundle& b) { return b.one_step ? *b.one_step : b.kernel; }

/// Environment seen by the bundle kernel on [-n, hi].
EnvironmentRealization kernel_environment(const Config& c, std::size_t n, std::int64_t hi = 0) {
    const std::size_t k = c.model->block;
    const auto lo = -static_cast<std::int64_t>((n + 1) * k);
    const auto r = realize(c.environment, env_seed(c), lo, (hi + 1) * static_cast<std::int64_t>(k));
    return k > 1 ? skeleton_environment(r, k) : r;
}

json report_json(const ConditionReport& r) {
    json j;
    j["name"] = r.name;
    j["estimate"] = r.estimate;
    j["halfwidth"] = r.halfwidth;
    j["threshold"] = r.threshold;
    j["direction"] = r.direction;
    j["pass"] = r.pass;
    j["details"] = json::array();
    for (const auto& d : r.details)
        j["details"].push_back({{"index", d.index}, {"value", d.value}, {"bound", d.bound}, {"se", d.se}});
    j["trajectory"] = json::array();
    for (const auto& [n, v] : r.trajectory) j["trajectory"].push_back({{"n", n}, {"estimate", v}});
    j["notes"] = r.notes;
    return j;
}

void run_simulate(const Config& c, const RunOptions&, Writer& w) {
    const auto& p = c.simulate;
    const auto& k = step_kernel(*c.model);
    const auto env = realize(c.environment, env_seed(c), 0, static_cast<std::int64_t>(p.steps));
    const Stream rng(chain_seed(c));
    // Scalar models (and the companion form of FAR-X) report Y_t, the first coordinate.
    const bool companion = c.model->one_step.has_value();
    const std::size_t y_width = companion ? 1 : k.state_space().point_size();

    std::vector<std::string> header{"t"};
    add_columns(header, "y", y_width);
    add_columns(header, "x", env.dim());
    Csv table(header);

    Point y = p.start;
    std::vector<double> row;
    for (std::size_t t = 0; t <= p.steps; ++t) {
        const auto ti = static_cast<std::int64_t>(t);
        const auto x = env[ti];
        row.assign(1, static_cast<double>(t));
        row.insert(row.end(), y.begin(), y.begin() + static_cast<std::ptrdiff_t>(y_width));
        row.insert(row.end(), x.begin(), x.end());
        table.row(row);
        if (t < p.steps) {
            auto s = rng.split_signed(ti + 1);
            y = kernel_step(k, x, y, s);
        }
    }
    w.csv("", table);

    json res;
    res["steps"] = p.steps;
    res["environment_window"] = env.id();
    res["final_state"] = y;
    w.summary(res);
}

void run_couple(const Config& c, const RunOptions& o, Writer& w) {
    const auto& p = c.couple;
    const auto& b = *c.model;
    CurveOptions opt;
    opt.schedule = p.schedule == "good-times" ? ScheduleKind::kGoodTimes : ScheduleKind::kFixedLevel;
    opt.R = p.R;
    opt.eta_min = p.eta_min;
    opt.lambda = b.drift.lambda;
    opt.b = b.drift.b;
    opt.good.C1_max = p.C1_max;
    opt.good.C2_max = p.C2_max;
    opt.burn_in = p.burn_in;
    opt.block = b.block;
    const auto fit = coalescence_curve(b.kernel, b.minorization, b.drift.V, c.environment, p.z, p.z_bar, p.ns,
                                       p.replicas, chain_seed(c), opt, Parallelism{o.threads});

    Csv table({"n", "replicas", "non_coalesced_fraction", "se"});
    json curve = json::array();
    for (const auto& pt : fit.curve) {
        table.row({double(pt.n), double(pt.replicas), pt.fraction, pt.se});
        curve.push_back({{"n", pt.n}, {"replicas", pt.replicas}, {"non_coalesced", pt.non_coalesced},
                         {"non_coalesced_fraction", pt.fraction}, {"se", pt.se}});
    }
    w.csv("", table);

    json res;
    res["kappa_hat"] = fit.kappa_hat;
    res["F_hat"] = fit.F_hat;
    res["r_squared"] = fit.r_squared;
    res["degenerate"] = fit.degenerate;
    res["clipped"] = fit.clipped;
    res["curve"] = curve;
    w.summary(res);
}

void run_backward(const Config& c, const RunOptions& o, Writer& w) {
    const auto& p = c.backward;
    const auto& b = *c.model;
    const auto env = kernel_environment(c, p.ns.back());
    const TvMode mode = p.mode == "exact" ? TvMode::kExact : TvMode::kCoupling;
    CouplingSetup setup;
    setup.minorization = &b.minorization;
    setup.V = b.drift.V;
    setup.schedule = CouplingSchedule::fixed_level(p.R);
    setup.replicas = p.replicas;
    setup.seed = chain_seed(c);
    setup.par = Parallelism{o.threads};

    Csv table({"n", "tv", "se"});
    json rows = json::array();
    std::string method;
    for (auto n : p.ns) {
        const auto est = backward_tv_pair(b.kernel, env, p.z, p.z_prime, n, mode, setup);
        method = est.method;
        table.row({double(n), est.tv, est.se});
        rows.push_back({{"n", n}, {"tv", est.tv}, {"se", est.se}});
    }
    w.csv("", table);

    json res;
    res["method"] = method;
    res["environment_window"] = env.id();
    res["tv"] = rows;
    w.summary(res);
}

std::vector<Point> default_tuples(const EnvironmentRealization& raw, std::size_t p) {
    const auto blocked = p > 1 ? block(raw, p) : raw;
    std::vector<Point> xs;
    for (std::int64_t t = -1; t >= -8; --t) xs.push_back(to_point(blocked[t]));
    return xs;
}

std::vector<Point> default_states(const KernelFamily& k, double R) {
    const auto& space = k.state_space();
    std::vector<Point> ys;
    if (space.kind == StateSpaceKind::kFinite) {
        for (std::size_t i = 0; i < space.dim; ++i) ys.push_back({double(i)});
        return ys;
    }
    for (double s : {0.0, 0.5, -0.5, 1.0, -1.0}) ys.push_back(Point(space.dim, s * R / double(space.dim)));
    return ys;
}

void run_check(const Config& c, const RunOptions& o, Writer& w) {
    const auto& p = c.check;
    const auto& b = *c.model;
    const std::size_t q = b.drift.p;
    const auto lo = -static_cast<std::int64_t>((p.n + 2) * q + 16);
    const auto raw = realize(c.environment, env_seed(c), lo, 0);
    const auto xs = p.xs.empty() ? default_tuples(raw, q) : p.xs;
    const auto ys = p.ys.empty() ? default_states(b.kernel, p.R) : p.ys;

    json reports = json::array();
    json skipped = json::array();

    std::vector<DriftPoint> points;
    for (const auto& x : xs)
        for (const auto& y : ys) points.push_back({x, y});
    reports.push_back(report_json(
        drift_check(step_kernel(b), b.drift, points, p.n_mc, Stream(chain_seed(c)), Parallelism{o.threads})));

    reports.push_back(report_json(geometric_mean_condition(raw, b.drift.lambda, q, p.n)));
    reports.push_back(report_json(log_plus_moment(q > 1 ? block(raw, q) : raw, b.drift.lambda, p.n)));

    try {
        const auto m = minorization_validate(b.kernel, b.minorization, p.R, xs, ys);
        ConditionReport r;
        r.name = "minorization";
        r.estimate = -m.min_margin;
        r.threshold = 0.0;
        r.halfwidth = 1e-9;
        r.direction = "<=";
        r.details.push_back({m.x_index, m.min_margin, 0.0, 0.0});
        r.notes.push_back("estimate is minus the smallest margin p_x(y, y') - eta(R, x) nu_R(x, y') over " +
                          std::to_string(m.evaluated) + " evaluations");
        r.notes.push_back("least favourable point: x #" + std::to_string(m.x_index) + ", y #" +
                          std::to_string(m.y_index) + ", y' #" + std::to_string(m.y_next_index));
        r.decide();
        reports.push_back(report_json(r));
    } catch (const CapabilityError& e) {
        skipped.push_back({{"name", "minorization"}, {"reason", e.what()}});
    }

    json res;
    res["environment_window"] = raw.id();
    res["reports"] = reports;
    res["skipped"] = skipped;
    w.summary(res);
}

void run_goodtimes(const Config& c, const RunOptions& o, Writer& w) {
    const auto& p = c.goodtimes;
    const auto& b = *c.model;
    const auto env = kernel_environment(c, p.n + p.burn_in, -1);
    GoodTimeOptions opt;
    opt.C1_max = p.C1_max;
    opt.C2_max = p.C2_max;
    const GoodSetEvaluator ev(env, b.drift.lambda, b.drift.b, b.minorization, opt, Parallelism{o.threads});
    GoodConstants constants;
    if (p.C1) {
        constants = {*p.C1, *p.C2};
    } else {
        constants = find_C(ev);
    }
    const auto n = static_cast<std::int64_t>(p.n);
    const auto g = good_times(ev, constants, -n, -1, Parallelism{o.threads});
    const auto inv = check_invariants(g, env, b.minorization);

    Csv table({"i", "tau"});
    for (std::size_t i = 0; i < g.tau.size(); ++i) table.row({double(i), double(g.tau[i])});
    w.csv("", table);

    json res;
    res["C1"] = g.C1;
    res["C2"] = g.C2;
    res["R"] = g.R;
    res["density"] = static_cast<double>(g.L(p.n)) / static_cast<double>(p.n);
    res["n"] = p.n;
    res["L_n"] = g.L(p.n);
    res["raw_count"] = g.raw_count;
    res["insufficient_past"] = g.insufficient_past;
    res["constants_searched"] = !p.C1.has_value();
    res["invariants"] = {{"spacing", inv.spacing}, {"level", inv.level}, {"eta_floor", inv.eta_floor}};
    w.summary(res);
}

void run_lyapunov(const Config& c, const RunOptions&, Writer& w) {
    const auto& p = c.lyapunov;
    const auto& b = *c.model;
    MatrixFn A;
    std::string source;
    if (b.companion) {
        A = *b.companion;
        source = "companion matrix";
    } else {
        if (b.drift.p != 1) throw CapabilityError("cli", "lyapunov needs a companion matrix or a one-step drift");
        const auto lambda = b.drift.lambda;
        A = [lambda](PointView x) { return Matrix::Constant(1, 1, lambda(x)); };
        source = "drift rate lambda";
    }
    const MatrixNorm norm = p.norm == "linf" ? MatrixNorm::kLinfInduced
                            : p.norm == "frobenius" ? MatrixNorm::kFrobenius
                                                     : MatrixNorm::kL1Induced;
    const auto env = realize(c.environment, env_seed(c), -static_cast<std::int64_t>(p.n), 0);
    json trajectory = json::array();
    double estimate = 0.0;
    for (std::size_t m : {p.n / 4, p.n / 2, p.n}) {
        if (m == 0) continue;
        estimate = lyapunov_exponent(A, env, m, norm);
        trajectory.push_back({{"n", m}, {"estimate", estimate}});
    }
    if (std::isnan(estimate)) throw NumericError("conditions", "Lyapunov estimate is NaN");

    json res;
    res["estimate"] = estimate;
    res["n"] = p.n;
    res["norm"] = p.norm;
    res["matrix"] = source;
    res["trajectory"] = trajectory;
    res["environment_window"] = env.id();
    w.summary(res);
}

void run_lln(const Config& c, const RunOptions&, Writer& w) {
    const auto& p = c.lln;
    const auto& b = *c.model;
    const auto& k = step_kernel(b);
    const auto env = realize(c.environment, env_seed(c), -static_cast<std::int64_t>(p.n_backward) - 1,
                             static_cast<std::int64_t>(p.n) + 1);
    const Expression f = p.f;
    const ScalarFn fn = [f](PointView y) { return f({}, y); };
    const auto r = lln_average(k, env, fn, p.n, p.n_backward, Stream(chain_seed(c)), p.z, p.checkpoints);

    Csv table({"t", "average"});
    for (const auto& [t, v] : r.running) table.row({double(t), v});
    w.csv("", table);

    json res;
    res["average"] = r.average;
    res["se"] = r.se;
    res["n"] = p.n;
    res["f"] = f.source();
    w.summary(res);
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    // Integral values stay in plain digits so counters never print as 1e+05.
    const bool integral = std::abs(v) < 1e15 && v == std::floor(v);
    const auto res = integral ? std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed)
                              : std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::filesystem::path> run(const Config& config, const RunOptions& options) {
    if (!config.model) throw ArgumentError("cli", "config has no model");
    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec) throw Error("cli", "cannot create output directory " + options.out_dir.string() + ": " + ec.message());
    Writer w(config, options);
    const auto& s = config.subcommand;
    if (s == "simulate") run_simulate(config, options, w);
    else if (s == "couple") run_couple(config, options, w);
    else if (s == "backward") run_backward(config, options, w);
    else if (s == "check") run_check(config, options, w);
    else if (s == "goodtimes") run_goodtimes(config, options, w);
    else if (s == "lyapunov") run_lyapunov(config, options, w);
    else if (s == "lln") run_lln(config, options, w);
    else throw ArgumentError("cli", "unknown subcommand " + s);
    return w.written();
}

}  // namespace mcre::cli
