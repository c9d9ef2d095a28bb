#include <cmath>

#include "hemlr/sigmoid_approx.hpp"
#include "support.hpp"

namespace hemlr {
    namespace {

        using testing::Rng;

        constexpr double kZ3c1 = 0.106795345032;
        constexpr double kZ3c3 = -0.000385032598;

        double naive_eval(const PolyApprox &p, double x) {
            double s = 0.0;
            for (size_t k = 0; k < p.coeffs().size(); k++) {
                s += p.coeffs()[k] * std::pow(x, static_cast<double>(k));
            }
            return s;
        }

        // Composite Simpson on [lo, hi].
        template <class F>
        double simpson(F f, double lo, double hi, int intervals = 20000) {
            const double h = (hi - lo) / intervals;
            double s = f(lo) + f(hi);
            for (int i = 1; i < intervals; i++) {
                s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
            }
            return s * h / 3.0;
        }

        TEST(FitLs, reproduces_a_quadratic) {
            const PolyApprox p = fit_ls([](double x) { return x * x; }, 2, {-1.0, 1.0});
            ASSERT_EQ(p.degree(), 2);
            EXPECT_NEAR(p.coeffs()[0], 0.0, 1e-10);
            EXPECT_NEAR(p.coeffs()[1], 0.0, 1e-10);
            EXPECT_NEAR(p.coeffs()[2], 1.0, 1e-10);
        }

        TEST(FitLs, sigmoid_shift_is_odd) {
            const PolyApprox p = fit_ls(logistic, 11, {-8.0, 8.0});
            EXPECT_NEAR(p.coeffs()[0], 0.5, 1e-9);
            for (size_t k = 2; k <= 10; k += 2) {
                EXPECT_LE(std::abs(p.coeffs()[k]), 1e-9) << "x^" << k;
            }
        }

        TEST(FitLs, degree_eleven_dense_grid_error) {
            const PolyApprox p = fit_ls(logistic, 11, {-8.0, 8.0});
            double worst = 0.0;
            for (int i = 0; i <= 10000; i++) {
                const double x = -8.0 + 16.0 * i / 10000.0;
                worst = std::max(worst, std::abs(p(x) - 1.0 / (1.0 + std::exp(-x))));
            }
            EXPECT_LE(worst, 1e-3);
        }

        TEST(FitLs, residual_monotone_in_degree) {
            double prev = ls_residual(logistic, fit_ls(logistic, 0, {-8.0, 8.0}));
            for (int k = 1; k <= 13; k++) {
                const double r = ls_residual(logistic, fit_ls(logistic, k, {-8.0, 8.0}));
                EXPECT_LE(r, prev + 1e-12) << "degree " << k;
                prev = r;
            }
        }

        TEST(FitLs, errors) {
            EXPECT_HEMLR_ERROR(fit_ls(logistic, 11, {1.0, 1.0}), ErrorKind::SingularSystem);
            EXPECT_HEMLR_ERROR(fit_ls(logistic, 11, {-8.0, 8.0}, 40), ErrorKind::InvalidArgument);
            EXPECT_HEMLR_ERROR(fit_ls(logistic, -1, {-8.0, 8.0}), ErrorKind::InvalidArgument);
        }

        TEST(GaussLegendre, integrates_monomials_exactly) {
            const GaussLegendre q = gauss_legendre(12);
            for (int k = 0; k <= 23; k++) {
                double s = 0.0;
                for (size_t i = 0; i < q.nodes.size(); i++) s += q.weights[i] * std::pow(q.nodes[i], k);
                const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
                EXPECT_NEAR(s, exact, 1e-14) << "x^" << k;
            }
        }

        TEST(FitPenalized, full_degree_value_fit_is_identity) {
            const PolyApprox z11 = fit_ls(logistic, 11, {-8.0, 8.0});
            const PolyApprox p = fit_penalized(z11, 11, {1.0, 0.0});
            ASSERT_EQ(p.degree(), 11);
            for (int k = 0; k <= 11; k++) {
                EXPECT_NEAR(p.coeffs()[static_cast<size_t>(k)], z11.coeffs()[static_cast<size_t>(k)], 1e-10);
            }
        }

        TEST(FitPenalized, even_coefficients_vanish) {
            const PolyApprox p = fit_sigmoid_surrogate(3);
            EXPECT_NEAR(p.coeffs()[0], 0.5, 1e-9);
            EXPECT_LE(std::abs(p.coeffs()[2]), 1e-9);
        }

        // Minimiser of F recomputed from a dense Simpson discretisation of both integrals.
        TEST(FitPenalized, matches_quadrature_normal_equations) {
            const PolyApprox z11 = fit_ls(logistic, 11, {-8.0, 8.0});
            const PolyApprox dz11 = z11.derivative();
            const double l0 = 128.0, l1 = 1.0;
            Eigen::Matrix4d a;
            Eigen::Vector4d b;
            for (int i = 0; i < 4; i++) {
                for (int j = 0; j < 4; j++) {
                    a(i, j) = l0 * simpson([&](double x) { return std::pow(x, i + j); }, -8, 8) +
                              (i > 0 && j > 0 ? l1 * i * j * simpson([&](double x) { return std::pow(x, i + j - 2); }, -8, 8)
                                              : 0.0);
                }
                b(i) = l0 * simpson([&](double x) { return z11(x) * std::pow(x, i); }, -8, 8) +
                       (i > 0 ? l1 * i * simpson([&](double x) { return dz11(x) * std::pow(x, i - 1); }, -8, 8) : 0.0);
            }
            const Eigen::Vector4d expect = a.ldlt().solve(b);
            const PolyApprox p = fit_penalized(z11, 3, {l0, l1});
            for (int k = 0; k < 4; k++) {
                EXPECT_NEAR(p.coeffs()[static_cast<size_t>(k)], expect(k), 1e-8 * std::max(1.0, std::abs(expect(k))))
                    << "x^" << k;
            }
        }

        TEST(FitPenalized, reproduces_reference_cubic) {
            const PolyApprox p = fit_sigmoid_surrogate(3, {128.0, 1.0}, {-8.0, 8.0});
            EXPECT_NEAR(p.coeffs()[0], 0.5, 1e-6);
            EXPECT_NEAR(p.coeffs()[1], kZ3c1, 1e-6);
            EXPECT_NEAR(p.coeffs()[2], 0.0, 1e-6);
            EXPECT_NEAR(p.coeffs()[3], kZ3c3, 1e-6);
        }

        TEST(FitPenalized, local_optimality) {
            const PolyApprox z11 = fit_ls(logistic, 11, {-8.0, 8.0});
            Rng rng(3);
            for (int trial = 0; trial < 20; trial++) {
                const FitObjective obj{rng.uniform(0.0, 200.0), rng.uniform(0.0, 5.0)};
                const int degree = rng.integer(1, 7);
                const PolyApprox p = fit_penalized(z11, degree, obj);
                const double f = penalized_objective(z11, p, obj);
                for (int k = 0; k <= degree; k++) {
                    for (double step : {1e-4, -1e-4}) {
                        auto c = p.coeffs();
                        c[static_cast<size_t>(k)] += step;
                        EXPECT_GE(penalized_objective(z11, PolyApprox(c, p.domain()), obj), f * (1 - 1e-12));
                    }
                }
            }
        }

        TEST(FitPenalized, objective_linear_in_weights) {
            const PolyApprox z11 = fit_ls(logistic, 11, {-8.0, 8.0});
            Rng rng(4);
            for (int trial = 0; trial < 50; trial++) {
                const PolyApprox cand({rng.uniform(), rng.uniform(), rng.uniform(-0.01, 0.01), rng.uniform(-1e-3, 1e-3)},
                                      {-8.0, 8.0});
                const double l0 = rng.uniform(0.0, 200.0), l1 = rng.uniform(0.0, 10.0);
                const double whole = penalized_objective(z11, cand, {l0, l1});
                const double split = l0 * penalized_objective(z11, cand, {1.0, 0.0}) +
                                     l1 * penalized_objective(z11, cand, {0.0, 1.0});
                EXPECT_NEAR(whole, split, 1e-10 * std::abs(whole));
            }
        }

        TEST(FitPenalized, invalid_weights) {
            const PolyApprox z11 = fit_ls(logistic, 11, {-8.0, 8.0});
            EXPECT_HEMLR_ERROR(fit_penalized(z11, 3, {0.0, 0.0}), ErrorKind::InvalidArgument);
            EXPECT_HEMLR_ERROR(fit_penalized(z11, 3, {-1.0, 1.0}), ErrorKind::InvalidArgument);
        }

        TEST(FitPenalized, derivative_only_fit_is_rank_deficient) {
            const PolyApprox z11 = fit_ls(logistic, 11, {-8.0, 8.0});
            EXPECT_HEMLR_ERROR(fit_penalized(z11, 3, {0.0, 1.0}), ErrorKind::SingularSystem);
        }

        TEST(PolyEval, cubic_values) {
            const PolyApprox z3 = reference_z3();
            EXPECT_EQ(z3(0.0), 0.5);
            EXPECT_NEAR(z3(4.0), 0.5 + kZ3c1 * 4.0 + kZ3c3 * 64.0, 1e-15);
            Rng rng(8);
            for (int i = 0; i < 200; i++) {
                const double x = rng.uniform(-8.0, 8.0);
                EXPECT_NEAR(z3(x) + z3(-x), 1.0, 1e-12);
            }
        }

        TEST(PolyEval, horner_matches_power_sum) {
            Rng rng(9);
            for (int trial = 0; trial < 100; trial++) {
                std::vector<double> c(static_cast<size_t>(rng.integer(1, 12)));
                for (auto &v : c) v = rng.uniform();
                const PolyApprox p(c, {-8.0, 8.0});
                const double x = rng.uniform(-8.0, 8.0);
                const double naive = naive_eval(p, x);
                EXPECT_NEAR(p(x), naive, 1e-12 * std::max(1.0, std::abs(naive)));
            }
        }

        TEST(PolyEval, clamping_and_matrix_form) {
            const PolyApprox z3 = reference_z3();
            EXPECT_EQ(z3(20.0, true), z3(8.0));
            EXPECT_EQ(z3(-20.0, true), z3(-8.0));
            EXPECT_NE(z3(20.0, false), z3(8.0));
            Matrix x(2, 2);
            x << 0, 4, -4, 20;
            const Matrix y = z3(x, true);
            EXPECT_EQ(y(0, 0), 0.5);
            EXPECT_EQ(y(0, 1), z3(4.0));
            EXPECT_EQ(y(1, 1), z3(8.0));
        }

        TEST(PolyApprox, fitted_midpoint_inside_unit_interval) {
            for (int degree : {1, 3, 5, 7}) {
                const PolyApprox p = fit_sigmoid_surrogate(degree);
                const double mid = p(0.5 * (p.domain().lo + p.domain().hi));
                EXPECT_GT(mid, 0.0);
                EXPECT_LT(mid, 1.0);
            }
            EXPECT_HEMLR_ERROR(PolyApprox({1.0}, {2.0, 1.0}), ErrorKind::InvalidArgument);
        }

    }  // namespace
}  // namespace hemlr
