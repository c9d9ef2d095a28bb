#include "hemlr/sigmoid_approx.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hemlr/error.hpp"

namespace hemlr {

    namespace {

        // Coefficients of p(a*x + b) given p's coefficients, all ascending.
        std::vector<double> compose_affine(const std::vector<double> &p, double a, double b) {
            const size_t n = p.size();
            std::vector<double> out(n, 0.0);
            // (a x + b)^i expanded incrementally.
            std::vector<double> power{1.0};
            for (size_t i = 0; i < n; i++) {
                for (size_t k = 0; k < power.size(); k++) {
                    out[k] += p[i] * power[k];
                }
                std::vector<double> next(power.size() + 1, 0.0);
                for (size_t k = 0; k < power.size(); k++) {
                    next[k] += b * power[k];
                    next[k + 1] += a * power[k];
                }
                power = std::move(next);
            }
            return out;
        }

        // int_{-1}^{1} t^p dt
        double moment(int p) {
            if (p < 0 || p % 2 == 1) {
                return 0.0;
            }
            return 2.0 / (p + 1);
        }

        struct Affine {
            double centre;
            double half;
        };

        Affine to_unit(Interval domain) {
            if (!(domain.lo < domain.hi) || !std::isfinite(domain.lo) || !std::isfinite(domain.hi)) {
                throw Error(ErrorKind::SingularSystem, "degenerate domain");
            }
            return {0.5 * (domain.lo + domain.hi), 0.5 * (domain.hi - domain.lo)};
        }

        // Quadratic form of F in unit-interval coordinates: sum_ij e_i e_j K_ij, K as below.
        double penalized_form(const std::vector<double> &e, double value_weight, double grad_weight) {
            double f = 0;
            for (size_t i = 0; i < e.size(); i++) {
                for (size_t j = 0; j < e.size(); j++) {
                    const int ii = static_cast<int>(i);
                    const int jj = static_cast<int>(j);
                    f += e[i] * e[j] * (value_weight * moment(ii + jj) + grad_weight * ii * jj * moment(ii + jj - 2));
                }
            }
            return f;
        }

        void check_objective(const FitObjective &objective) {
            if (!(objective.value_weight >= 0) || !(objective.gradient_weight >= 0) ||
                !(objective.value_weight + objective.gradient_weight > 0)) {
                throw Error(ErrorKind::InvalidArgument, "fit weights must be non-negative with a positive sum");
            }
        }

    }  // namespace

    PolyApprox::PolyApprox(std::vector<double> coeffs, Interval domain)
        : coeffs_(std::move(coeffs)), domain_(domain) {
        if (coeffs_.empty()) {
            throw Error(ErrorKind::InvalidArgument, "polynomial needs at least one coefficient");
        }
        if (!(domain_.lo < domain_.hi)) {
            throw Error(ErrorKind::InvalidArgument, "polynomial domain must satisfy lo < hi");
        }
    }

    double PolyApprox::operator()(double x, bool clamp) const {
        if (clamp) {
            x = std::clamp(x, domain_.lo, domain_.hi);
        }
        double acc = coeffs_.back();
        for (auto it = coeffs_.rbegin() + 1; it != coeffs_.rend(); ++it) {
            acc = acc * x + *it;
        }
        return acc;
    }

    Matrix PolyApprox::operator()(const Matrix &x, bool clamp) const {
        return x.unaryExpr([&](double v) { return (*this)(v, clamp); });
    }

    PolyApprox PolyApprox::derivative() const {
        if (coeffs_.size() == 1) {
            return PolyApprox({0.0}, domain_);
        }
        std::vector<double> d(coeffs_.size() - 1);
        for (size_t i = 1; i < coeffs_.size(); i++) {
            d[i - 1] = static_cast<double>(i) * coeffs_[i];
        }
        return PolyApprox(std::move(d), domain_);
    }

    double logistic(double x) {
        if (x >= 0) {
            return 1.0 / (1.0 + std::exp(-x));
        }
        const double e = std::exp(x);
        return e / (1.0 + e);
    }

    GaussLegendre gauss_legendre(int points) {
        if (points < 1) {
            throw Error(ErrorKind::InvalidArgument, "quadrature needs at least one node");
        }
        GaussLegendre rule;
        rule.nodes.resize(static_cast<size_t>(points));
        rule.weights.resize(static_cast<size_t>(points));
        const int n = points;
        for (int i = 0; i < (n + 1) / 2; i++) {
            double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0;
            for (int iter = 0; iter < 100; iter++) {
                double p0 = 1.0, p1 = t;
                for (int k = 2; k <= n; k++) {
                    const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                if (n == 1) {
                    p0 = 1.0;
                }
                dp = n * (t * p1 - p0) / (t * t - 1.0);
                const double step = p1 / dp;
                t -= step;
                if (std::abs(step) < 1e-16) {
                    break;
                }
            }
            const double w = 2.0 / ((1.0 - t * t) * dp * dp);
            rule.nodes[static_cast<size_t>(i)] = -t;
            rule.nodes[static_cast<size_t>(n - 1 - i)] = t;
            rule.weights[static_cast<size_t>(i)] = w;
            rule.weights[static_cast<size_t>(n - 1 - i)] = w;
        }
        if (n % 2 == 1) {
            rule.nodes[static_cast<size_t>(n / 2)] = 0.0;
        }
        return rule;
    }

    PolyApprox fit_ls(const std::function<double(double)> &target, int degree, Interval domain,
                      int quadrature_points) {
        if (degree < 0) {
            throw Error(ErrorKind::InvalidArgument, "degree must be non-negative");
        }
        if (quadrature_points < 4 * degree || quadrature_points < 1) {
            throw Error(ErrorKind::InvalidArgument, "quadrature resolution must be at least 4 x degree");
        }
        const Affine map = to_unit(domain);
        const GaussLegendre rule = gauss_legendre(quadrature_points);

        // Legendre projection coefficients a_k = (2k+1)/2 int f P_k dt.
        std::vector<double> legendre(static_cast<size_t>(degree + 1), 0.0);
        for (size_t q = 0; q < rule.nodes.size(); q++) {
            const double t = rule.nodes[q];
            const double fw = target(map.centre + map.half * t) * rule.weights[q];
            double p0 = 1.0, p1 = t;
            for (int k = 0; k <= degree; k++) {
                const double pk = k == 0 ? p0 : p1;
                legendre[static_cast<size_t>(k)] += fw * pk;
                if (k >= 1) {
                    const double p2 = ((2.0 * k + 1.0) * t * p1 - k * p0) / (k + 1.0);
                    p0 = p1;
                    p1 = p2;
                }
            }
        }
        for (int k = 0; k <= degree; k++) {
            legendre[static_cast<size_t>(k)] *= (2.0 * k + 1.0) / 2.0;
        }

        // Sum a_k P_k(t) in monomials of t.
        std::vector<double> mono(static_cast<size_t>(degree + 1), 0.0);
        std::vector<double> prev{1.0}, cur{0.0, 1.0};
        for (int k = 0; k <= degree; k++) {
            const std::vector<double> &pk = k == 0 ? prev : cur;
            for (size_t i = 0; i < pk.size(); i++) {
                mono[i] += legendre[static_cast<size_t>(k)] * pk[i];
            }
            if (k >= 1) {
                std::vector<double> next(cur.size() + 1, 0.0);
                for (size_t i = 0; i < cur.size(); i++) {
                    next[i + 1] += (2.0 * k + 1.0) / (k + 1.0) * cur[i];
                }
                for (size_t i = 0; i < prev.size(); i++) {
                    next[i] -= k / (k + 1.0) * prev[i];
                }
                prev = std::move(cur);
                cur = std::move(next);
            }
        }
        return PolyApprox(compose_affine(mono, 1.0 / map.half, -map.centre / map.half), domain);
    }

    PolyApprox fit_penalized(const PolyApprox &reference, int degree, const FitObjective &objective) {
        check_objective(objective);
        if (degree < 0) {
            throw Error(ErrorKind::InvalidArgument, "degree must be non-negative");
        }
        const Affine map = to_unit(reference.domain());
        const std::vector<double> ref = compose_affine(reference.coeffs(), map.half, map.centre);
        const double l0 = objective.value_weight;
        const double l1 = objective.gradient_weight / (map.half * map.half);

        const int m = degree + 1;
        Matrix normal(m, m);
        Vector rhs = Vector::Zero(m);
        for (int i = 0; i < m; i++) {
            for (int j = 0; j < m; j++) {
                normal(i, j) = l0 * moment(i + j) + l1 * i * j * moment(i + j - 2);
            }
            for (int k = 0; k < static_cast<int>(ref.size()); k++) {
                rhs(i) += ref[static_cast<size_t>(k)] * (l0 * moment(k + i) + l1 * k * i * moment(k + i - 2));
            }
        }
        Eigen::FullPivLU<Matrix> lu(normal);
        if (lu.rank() < m) {
            throw Error(ErrorKind::SingularSystem, "penalised normal system is rank deficient");
        }
        const Vector q = lu.solve(rhs);
        std::vector<double> unit(q.data(), q.data() + q.size());
        return PolyApprox(compose_affine(unit, 1.0 / map.half, -map.centre / map.half), reference.domain());
    }

    double penalized_objective(const PolyApprox &reference, const PolyApprox &candidate,
                               const FitObjective &objective) {
        const Affine map = to_unit(reference.domain());
        std::vector<double> e = reference.coeffs();
        e.resize(std::max(e.size(), candidate.coeffs().size()), 0.0);
        for (size_t i = 0; i < candidate.coeffs().size(); i++) {
            e[i] -= candidate.coeffs()[i];
        }
        const std::vector<double> unit = compose_affine(e, map.half, map.centre);
        // dx = half dt and d/dx = (1/half) d/dt
        return map.half * penalized_form(unit, objective.value_weight,
                                         objective.gradient_weight / (map.half * map.half));
    }

    double ls_residual(const std::function<double(double)> &target, const PolyApprox &p, int quadrature_points) {
        const Affine map = to_unit(p.domain());
        const GaussLegendre rule = gauss_legendre(quadrature_points);
        double acc = 0;
        for (size_t q = 0; q < rule.nodes.size(); q++) {
            const double x = map.centre + map.half * rule.nodes[q];
            const double r = target(x) - p(x);
            acc += rule.weights[q] * r * r;
        }
        return std::sqrt(map.half * acc);
    }

    PolyApprox reference_z3() {
        return PolyApprox({0.5, 0.106795345032, 0.0, -0.000385032598}, Interval{-8.0, 8.0});
    }

    PolyApprox fit_sigmoid_surrogate(int degree, const FitObjective &objective, Interval domain) {
        const PolyApprox z11 = fit_ls(logistic, 11, domain, 256);
        return fit_penalized(z11, degree, objective);
    }

}  // namespace hemlr
