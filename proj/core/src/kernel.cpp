#include "mcre/kernel.hpp"

#include "mcre/error.hpp"

#include <cmath>
#include <sstream>

namespace mcre {
namespace {

constexpr const char* kModule = "kernel";
constexpr double kRowTolerance = 1e-12;
constexpr double kMarginTolerance = 1e-9;
constexpr std::size_t kMaxRejections = 1'000'000;

void check_row_stochastic(const Matrix& m, const char* module, bool config_error) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double s = m.row(i).sum();
        const bool negative = (m.row(i).array() < 0.0).any();
        if (negative || std::abs(s - 1.0) > kRowTolerance) {
            std::ostringstream os;
            os << "row " << i << " is not a probability vector (sum " << s << ")";
            if (config_error) throw ConfigurationError(module, os.str());
            throw KernelError(module, os.str());
        }
    }
}

std::size_t sample_label(const Eigen::RowVectorXd& row, double u) {
    double c = 0.0;
    for (Eigen::Index j = 0; j < row.size(); ++j) {
        c += row(j);
        if (u < c) return static_cast<std::size_t>(j);
    }
    for (Eigen::Index j = row.size() - 1; j >= 0; --j)
        if (row(j) > 0.0) return static_cast<std::size_t>(j);
    return 0;
}

void sample_from_row(const Matrix& m, PointView y, Stream& rng, std::span<double> out) {
    const auto i = static_cast<Eigen::Index>(label_of(y));
    if (i < 0 || i >= m.rows()) throw KernelError(kModule, "state label outside the finite state space");
    const Eigen::RowVectorXd row = m.row(i);
    if (std::abs(row.sum() - 1.0) > 1e-9 || (row.array() < 0.0).any())
        throw KernelError(kModule, "cannot sample from an unnormalized row");
    out[0] = static_cast<double>(sample_label(row, rng.uniform()));
}

}  // namespace

KernelFamily::KernelFamily(StateSpace space, SampleFn sample, std::optional<DensityFn> density,
                           std::optional<MatrixFn> matrix, std::string reference)
    : space_(space),
      sample_(std::move(sample)),
      density_(std::move(density)),
      matrix_(std::move(matrix)),
      reference_(std::move(reference)) {}

KernelFamily KernelFamily::finite(std::vector<Matrix> by_label) {
    if (by_label.empty()) throw ConfigurationError(kModule, "finite kernel needs at least one matrix");
    const auto n = by_label.front().rows();
    for (const auto& m : by_label) {
        if (m.rows() != n || m.cols() != n) throw ConfigurationError(kModule, "finite kernel matrices must share one square shape");
        check_row_stochastic(m, kModule, true);
    }
    auto table = std::make_shared<const std::vector<Matrix>>(std::move(by_label));
    auto lookup = [table](PointView x) -> const Matrix& {
        const std::size_t l = label_of(x);
        if (l >= table->size()) throw KernelError(kModule, "environment label " + std::to_string(l) + " has no matrix");
        return (*table)[l];
    };
    SampleFn sample = [lookup](PointView x, PointView y, Stream& rng, std::span<double> out) {
        sample_from_row(lookup(x), y, rng, out);
    };
    DensityFn density = [lookup](PointView x, PointView y, PointView y_next) {
        return lookup(x)(static_cast<Eigen::Index>(label_of(y)), static_cast<Eigen::Index>(label_of(y_next)));
    };
    MatrixFn matrix = [lookup](PointView x) { return lookup(x); };
    return KernelFamily(StateSpace::finite(static_cast<std::size_t>(n)), std::move(sample), std::move(density),
                        std::move(matrix), "counting");
}

KernelFamily KernelFamily::finite(std::size_t states, MatrixFn matrix) {
    SampleFn sample = [matrix](PointView x, PointView y, Stream& rng, std::span<double> out) {
        sample_from_row(matrix(x), y, rng, out);
    };
    DensityFn density = [matrix](PointView x, PointView y, PointView y_next) {
        return matrix(x)(static_cast<Eigen::Index>(label_of(y)), static_cast<Eigen::Index>(label_of(y_next)));
    };
    return KernelFamily(StateSpace::finite(states), std::move(sample), std::move(density), std::move(matrix),
                        "counting");
}

Point KernelFamily::sample(PointView x, PointView y, Stream& rng) const {
    Point out(space_.point_size());
    sample_(x, y, rng, out);
    return out;
}

double KernelFamily::density(PointView x, PointView y, PointView y_next) const {
    if (!density_) throw CapabilityError(kModule, "kernel family has no density");
    return (*density_)(x, y, y_next);
}

Matrix KernelFamily::matrix(PointView x) const {
    if (!matrix_) throw CapabilityError(kModule, "kernel family has no exact matrix form");
    return (*matrix_)(x);
}

Point kernel_step(const KernelFamily& k, PointView x, PointView y, Stream& rng) {
    return k.sample(x, y, rng);
}

Point ComposedKernel::draw(PointView y, Stream& rng) const {
    Point out(space.point_size());
    sample(y, rng, out);
    return out;
}

ComposedKernel compose(const KernelFamily& k, const std::vector<Point>& xs) {
    if (xs.empty()) throw ArgumentError(kModule, "compose: need at least one environment value");
    ComposedKernel out;
    out.space = k.state_space();
    if (k.has_matrix()) {
        Matrix m = k.matrix(xs.front());
        for (std::size_t i = 1; i < xs.size(); ++i) m = m * k.matrix(xs[i]);
        out.matrix = std::move(m);
    }
    const KernelFamily family = k;
    out.sample = [family, xs](PointView y, Stream& rng, std::span<double> result) {
        Point cur(y.begin(), y.end());
        Point next(family.state_space().point_size());
        for (const auto& x : xs) {
            family.sample(x, cur, rng, next);
            std::swap(cur, next);
        }
        std::copy(cur.begin(), cur.end(), result.begin());
    };
    return out;
}

ComposedKernel compose_tuple(const KernelFamily& k, PointView tuple, std::size_t point_dim) {
    if (point_dim == 0 || tuple.size() % point_dim != 0)
        throw ArgumentError(kModule, "compose_tuple: tuple size is not a multiple of the point dimension");
    const std::size_t p = tuple.size() / point_dim;
    std::vector<Point> xs;
    xs.reserve(p);
    for (std::size_t j = p; j-- > 0;) xs.emplace_back(tuple.begin() + j * point_dim, tuple.begin() + (j + 1) * point_dim);
    return compose(k, xs);
}

ComposedKernel compose(const ComposedKernel& a, const ComposedKernel& b) {
    if (!(a.space == b.space)) throw CapabilityError(kModule, "compose: kernels act on different state spaces");
    ComposedKernel out;
    out.space = a.space;
    if (a.matrix && b.matrix) out.matrix = (*a.matrix) * (*b.matrix);
    out.sample = [a, b](PointView y, Stream& rng, std::span<double> result) {
        Point mid(a.space.point_size());
        a.sample(y, rng, mid);
        b.sample(mid, rng, result);
    };
    return out;
}

Eigen::RowVectorXd finite_residual_row(const Eigen::RowVectorXd& row, double eta, const Eigen::RowVectorXd& nu) {
    if (!(eta >= 0.0) || !(eta < 1.0)) throw ArgumentError(kModule, "residual needs eta in [0, 1)");
    if (row.size() != nu.size()) throw ArgumentError(kModule, "residual: row and nu lengths differ");
    Eigen::RowVectorXd r = row - eta * nu;
    const double worst = r.minCoeff();
    if (worst < -kMarginTolerance) {
        std::ostringstream os;
        os << "residual mass " << worst << " is negative: P >= eta nu does not hold";
        throw MinorizationViolation(kModule, os.str());
    }
    r = r.cwiseMax(0.0) / (1.0 - eta);
    return r;
}

Eigen::RowVectorXd finite_nu(const MinorizationSpec& m, double R, PointView x, std::size_t states) {
    if (!m.nu_density) throw CapabilityError(kModule, "finite minorization needs nu_density");
    Eigen::RowVectorXd nu(static_cast<Eigen::Index>(states));
    for (std::size_t j = 0; j < states; ++j) {
        const double label = static_cast<double>(j);
        nu(static_cast<Eigen::Index>(j)) = (*m.nu_density)(R, x, PointView(&label, 1));
    }
    return nu;
}

Point residual_sample(const KernelFamily& k, const MinorizationSpec& m, double R, PointView x, PointView y,
                      Stream& rng, ResidualStats* stats) {
    const double eta = m.eta(R, x);
    if (!(eta >= 0.0) || !(eta < 1.0)) throw ArgumentError(kModule, "residual_sample needs eta(R, x) in [0, 1)");
    if (eta == 0.0) {
        if (stats) {
            ++stats->proposals;
            ++stats->accepted;
        }
        return k.sample(x, y, rng);
    }
    if (k.has_matrix()) {
        const Matrix P = k.matrix(x);
        const auto states = static_cast<std::size_t>(P.cols());
        const Eigen::RowVectorXd q =
            finite_residual_row(P.row(static_cast<Eigen::Index>(label_of(y))), eta, finite_nu(m, R, x, states));
        if (stats) {
            ++stats->proposals;
            ++stats->accepted;
        }
        return {static_cast<double>(sample_label(q, rng.uniform()))};
    }
    if (!k.has_density() || !m.nu_density)
        throw CapabilityError(kModule, "residual sampling needs a matrix, or both kernel and nu densities");
    Point w(k.state_space().point_size());
    for (std::size_t attempt = 0; attempt < kMaxRejections; ++attempt) {
        k.sample(x, y, rng, w);
        const double p = k.density(x, y, w);
        const double nu = (*m.nu_density)(R, x, w);
        const double excess = p - eta * nu;
        if (excess < -kMarginTolerance) {
            std::ostringstream os;
            os << "p_x(y, w) - eta nu(w) = " << excess << " < 0 at a proposed point";
            throw MinorizationViolation(kModule, os.str());
        }
        if (stats) ++stats->proposals;
        if (rng.uniform() * p < excess) {
            if (stats) ++stats->accepted;
            return w;
        }
    }
    throw NumericError(kModule, "residual_sample: more than 10^6 consecutive rejections");
}

MinorizationReport minorization_validate(const KernelFamily& k, const MinorizationSpec& m, double R,
                                         const std::vector<Point>& xs, const std::vector<Point>& ys) {
    MinorizationReport rep;
    rep.min_margin = std::numeric_limits<double>::infinity();
    auto consider = [&](double margin, std::size_t xi, std::size_t yi, std::size_t yn) {
        ++rep.evaluated;
        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.x_index = xi;
            rep.y_index = yi;
            rep.y_next_index = yn;
        }
    };
    for (std::size_t xi = 0; xi < xs.size(); ++xi) {
        const Point& x = xs[xi];
        const double eta = m.eta(R, x);
        if (k.has_matrix()) {
            const Matrix P = k.matrix(x);
            const auto nu = finite_nu(m, R, x, static_cast<std::size_t>(P.cols()));
            for (std::size_t yi = 0; yi < ys.size(); ++yi) {
                const auto row = static_cast<Eigen::Index>(label_of(ys[yi]));
                for (Eigen::Index j = 0; j < P.cols(); ++j)
                    consider(P(row, j) - eta * nu(j), xi, yi, static_cast<std::size_t>(j));
            }
        } else {
            if (!k.has_density() || !m.nu_density)
                throw CapabilityError(kModule, "minorization_validate needs densities or a matrix");
            for (std::size_t yi = 0; yi < ys.size(); ++yi)
                for (std::size_t yn = 0; yn < ys.size(); ++yn)
                    consider(k.density(x, ys[yi], ys[yn]) - eta * (*m.nu_density)(R, x, ys[yn]), xi, yi, yn);
        }
    }
    if (rep.evaluated == 0) rep.min_margin = 0.0;
    rep.pass = rep.min_margin >= -kMarginTolerance;
    return rep;
}

double integrate_density_1d(const KernelFamily& k, PointView x, PointView y, double lo, double hi,
                            std::size_t intervals) {
    if (intervals % 2 == 1) ++intervals;
    const double h = (hi - lo) / static_cast<double>(intervals);
    double s = 0.0;
    for (std::size_t i = 0; i <= intervals; ++i) {
        const double v = lo + h * static_cast<double>(i);
        const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        s += w * k.density(x, y, PointView(&v, 1));
    }
    return s * h / 3.0;
}

}  // namespace mcre
