#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "hemlr/data.hpp"
#include "hemlr/linalg.hpp"
#include "hemlr/sigmoid_approx.hpp"

namespace hemlr {

    enum class LossKind {
        SoftmaxLL,     // ln L
        SigmoidLL,     // ln L1
        SLE,           // ln L2 = sum ln |y - sigmoid|
        UniversalSLE,  // L3 = sum (y - sigmoid)^2
        MeanSLE,       // L3 / n
    };

    enum class Optimizer {
        RawNAG,        // softmax log-likelihood, plain gradient
        SigmoidNAG,    // g = (Y - sigmoid(X W^T))^T X, plain rate
        SigmoidNAGQG,  // G = B (.) g, rate 1 + gamma
    };

    LossKind parse_loss_kind(std::string_view name);
    std::string_view to_string(LossKind kind);
    Optimizer parse_optimizer(std::string_view name);
    std::string_view to_string(Optimizer optimizer);

    // Elementwise activation: the exact logistic function or a polynomial surrogate.
    class Activation {
    public:
        static Activation exact();
        static Activation polynomial(PolyApprox poly, bool clamp = true);

        double operator()(double z) const;
        Matrix operator()(const Matrix &z) const;

        bool is_polynomial() const {
            return poly_.has_value();
        }
        const std::optional<PolyApprox> &poly() const {
            return poly_;
        }
        bool clamped() const {
            return clamp_;
        }

    private:
        std::optional<PolyApprox> poly_;
        bool clamp_ = false;
    };

    double softmax_loglik(const Matrix &w, const Dataset &data);

    // Loss of the SLE family (any LossKind except SoftmaxLL). SLE throws DegenerateLikelihood when some
    // |y - sigmoid| falls below 1e-300.
    double sle_loss(const Matrix &w, const Dataset &data, LossKind kind);

    double loss(const Matrix &w, const Dataset &data, LossKind kind);

    // (Y - act(X W^T))^T X
    Matrix sle_gradient(const Matrix &w, const Dataset &data, const Activation &activation);

    // (Y - softmax(X W^T))^T X, the ascent direction of ln L.
    Matrix softmax_gradient(const Matrix &w, const Dataset &data);

    struct Preconditioner {
        Matrix b;  // c x (1+d), every row identical
        double eps = 1e-10;
    };

    // B[0][j] = 1 / (eps + sum_i |H[i][j]|) with H = -X^T X / 4, copied to all c rows.
    Preconditioner build_preconditioner(const Matrix &x, int num_classes, double eps = 1e-10);

    struct NagState {
        Matrix v;
        Matrix w;
        double alpha0 = 0.01;
        double alpha1 = 0.0;
        double eta = 0.0;    // last step's eta
        double gamma = 0.0;  // last step's gamma
        int count = 1;       // index of the next step

        static NagState zeros(int num_classes, int cols);
    };

    enum class StepRate {
        Quadratic,  // 1 + gamma
        Plain,      // gamma
    };

    double next_alpha(double alpha0);

    // One update of the enhanced NAG schedule:
    //   eta = (1 - alpha0) / alpha1, gamma = 1 / (n * count)
    //   w_temp = W + rate * G;  W = (1 - eta) w_temp + eta V;  V = w_temp
    NagState nag_step(NagState state, const Matrix &g, int n, StepRate rate = StepRate::Quadratic);

    // Top-1 accuracy; ties go to the lowest class index.
    double precision(const Matrix &w, const Dataset &data);
    std::vector<int> predict(const Matrix &w, const Matrix &x);

    struct IterationMetrics {
        int iter = 0;
        double precision_train = 0;
        double precision_test = 0;
        double ln_l2 = 0;  // NaN when degenerate
        double ln_l_softmax = 0;
    };

    struct TrainOptions {
        int iterations = 2;
        double eps = 1e-10;
        bool record_metrics = true;
    };

    struct TrainResult {
        Matrix w;
        std::vector<IterationMetrics> metrics;  // entry 0 is the zero model
    };

    TrainResult train(const Dataset &train_set, Optimizer optimizer, const Activation &activation,
                      const TrainOptions &options, const Dataset *test_set = nullptr);

    IterationMetrics evaluate_metrics(int iter, const Matrix &w, const Dataset &train_set, const Dataset *test_set);

}  // namespace hemlr
