#pragma once

#include <functional>
#include <vector>

#include "hemlr/linalg.hpp"

namespace hemlr {

    struct Interval {
        double lo = -8.0;
        double hi = 8.0;
    };

    // Polynomial in monomial form, ascending degree, with the interval it was fitted on.
    class PolyApprox {
    public:
        PolyApprox() = default;
        PolyApprox(std::vector<double> coeffs, Interval domain);

        const std::vector<double> &coeffs() const {
            return coeffs_;
        }
        const Interval &domain() const {
            return domain_;
        }
        int degree() const {
            return static_cast<int>(coeffs_.size()) - 1;
        }

        // Horner evaluation. With clamp set, x is first clamped to the domain.
        double operator()(double x, bool clamp = false) const;
        Matrix operator()(const Matrix &x, bool clamp = false) const;

        PolyApprox derivative() const;

    private:
        std::vector<double> coeffs_{0.0};
        Interval domain_{};
    };

    struct FitObjective {
        double value_weight = 128.0;    // lambda0
        double gradient_weight = 1.0;   // lambda1
    };

    double logistic(double x);

    // Continuous least-squares projection of target onto degree-k polynomials over domain. The projection is
    // taken in the Legendre basis with Gauss-Legendre quadrature, then converted to monomials.
    PolyApprox fit_ls(const std::function<double(double)> &target, int degree, Interval domain,
                      int quadrature_points = 256);

    // Minimises F = l0 * int (ref - p)^2 + l1 * int (ref' - p')^2 over polynomials p of the given degree on
    // ref's domain. Every integral is a monomial integral evaluated in closed form.
    PolyApprox fit_penalized(const PolyApprox &reference, int degree, const FitObjective &objective);

    // Value of F for a candidate, computed with the same closed-form integrals.
    double penalized_objective(const PolyApprox &reference, const PolyApprox &candidate,
                               const FitObjective &objective);

    // L2 distance between target and p over p's domain, by Gauss-Legendre quadrature.
    double ls_residual(const std::function<double(double)> &target, const PolyApprox &p, int quadrature_points = 256);

    // Z3 = 0.5 + 0.106795345032 x - 0.000385032598 x^3 on [-8, 8], the surrogate used for encrypted training.
    PolyApprox reference_z3();

    // Degree-11 least-squares fit followed by the penalised degree-k fit.
    PolyApprox fit_sigmoid_surrogate(int degree = 3, const FitObjective &objective = {}, Interval domain = {});

    struct GaussLegendre {
        std::vector<double> nodes;
        std::vector<double> weights;
    };

    // Nodes and weights on [-1, 1].
    GaussLegendre gauss_legendre(int points);

}  // namespace hemlr
