#include "hemlr/mlr.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "hemlr/error.hpp"

namespace hemlr {

    namespace {

        void check_dims(const Matrix &w, const Dataset &data) {
            if (w.rows() != data.c() || w.cols() != data.x.cols()) {
                throw Error(ErrorKind::DimensionMismatch,
                            "weights are " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                                ", dataset needs " + std::to_string(data.c()) + "x" + std::to_string(data.x.cols()));
            }
        }

        // ln sigmoid(z) without overflow.
        double log_logistic(double z) {
            return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
        }

    }  // namespace

    LossKind parse_loss_kind(std::string_view name) {
        if (name == "softmax") return LossKind::SoftmaxLL;
        if (name == "sigmoid-ll") return LossKind::SigmoidLL;
        if (name == "sle") return LossKind::SLE;
        if (name == "universal-sle") return LossKind::UniversalSLE;
        if (name == "mean-sle") return LossKind::MeanSLE;
        throw Error(ErrorKind::InvalidArgument, "unknown loss '" + std::string(name) + "'");
    }

    std::string_view to_string(LossKind kind) {
        switch (kind) {
            case LossKind::SoftmaxLL: return "softmax";
            case LossKind::SigmoidLL: return "sigmoid-ll";
            case LossKind::SLE: return "sle";
            case LossKind::UniversalSLE: return "universal-sle";
            case LossKind::MeanSLE: return "mean-sle";
        }
        return "?";
    }

    Optimizer parse_optimizer(std::string_view name) {
        if (name == "raw-nag") return Optimizer::RawNAG;
        if (name == "sigmoid-nag") return Optimizer::SigmoidNAG;
        if (name == "sigmoid-nag-qg") return Optimizer::SigmoidNAGQG;
        throw Error(ErrorKind::InvalidArgument, "unknown optimizer '" + std::string(name) + "'");
    }

    std::string_view to_string(Optimizer optimizer) {
        switch (optimizer) {
            case Optimizer::RawNAG: return "raw-nag";
            case Optimizer::SigmoidNAG: return "sigmoid-nag";
            case Optimizer::SigmoidNAGQG: return "sigmoid-nag-qg";
        }
        return "?";
    }

    Activation Activation::exact() {
        return Activation{};
    }

    Activation Activation::polynomial(PolyApprox poly, bool clamp) {
        Activation a;
        a.poly_ = std::move(poly);
        a.clamp_ = clamp;
        return a;
    }

    double Activation::operator()(double z) const {
        return poly_ ? (*poly_)(z, clamp_) : logistic(z);
    }

    Matrix Activation::operator()(const Matrix &z) const {
        return z.unaryExpr([&](double v) { return (*this)(v); });
    }

    double softmax_loglik(const Matrix &w, const Dataset &data) {
        check_dims(w, data);
        const Matrix scores = data.x * w.transpose();
        double total = 0;
        for (Eigen::Index i = 0; i < scores.rows(); i++) {
            const double top = scores.row(i).maxCoeff();
            const double lse = top + std::log((scores.row(i).array() - top).exp().sum());
            total += scores(i, data.labels[static_cast<size_t>(i)]) - lse;
        }
        return total;
    }

    double sle_loss(const Matrix &w, const Dataset &data, LossKind kind) {
        check_dims(w, data);
        const Matrix scores = data.x * w.transpose();
        double total = 0;
        switch (kind) {
            case LossKind::SoftmaxLL:
                throw Error(ErrorKind::InvalidArgument, "softmax log-likelihood is not an SLE-family loss");
            case LossKind::SigmoidLL:
                for (Eigen::Index i = 0; i < scores.rows(); i++) {
                    total += log_logistic(scores(i, data.labels[static_cast<size_t>(i)]));
                }
                return total;
            case LossKind::SLE:
                for (Eigen::Index i = 0; i < scores.rows(); i++) {
                    for (Eigen::Index j = 0; j < scores.cols(); j++) {
                        const double y = data.one_hot(i, j);
                        // |y - sigmoid(s)| is sigmoid(-s) for y = 1 and sigmoid(s) for y = 0.
                        double err;
                        double log_err;
                        if (y == 1.0) {
                            err = logistic(-scores(i, j));
                            log_err = log_logistic(-scores(i, j));
                        } else if (y == 0.0) {
                            err = logistic(scores(i, j));
                            log_err = log_logistic(scores(i, j));
                        } else {
                            err = std::abs(y - logistic(scores(i, j)));
                            log_err = std::log(err);
                        }
                        if (!(err >= 1e-300)) {
                            throw Error(ErrorKind::DegenerateLikelihood,
                                        "|y - sigmoid| underflows at row " + std::to_string(i));
                        }
                        total += log_err;
                    }
                }
                return total;
            case LossKind::UniversalSLE:
            case LossKind::MeanSLE: {
                const Matrix diff = data.one_hot - scores.unaryExpr([](double s) { return logistic(s); });
                total = diff.squaredNorm();
                return kind == LossKind::MeanSLE ? total / data.n() : total;
            }
        }
        return total;
    }

    double loss(const Matrix &w, const Dataset &data, LossKind kind) {
        return kind == LossKind::SoftmaxLL ? softmax_loglik(w, data) : sle_loss(w, data, kind);
    }

    Matrix sle_gradient(const Matrix &w, const Dataset &data, const Activation &activation) {
        check_dims(w, data);
        const Matrix z = activation(Matrix(data.x * w.transpose()));
        return (data.one_hot - z).transpose() * data.x;
    }

    Matrix softmax_gradient(const Matrix &w, const Dataset &data) {
        check_dims(w, data);
        Matrix p = data.x * w.transpose();
        for (Eigen::Index i = 0; i < p.rows(); i++) {
            const double top = p.row(i).maxCoeff();
            p.row(i) = (p.row(i).array() - top).exp();
            p.row(i) /= p.row(i).sum();
        }
        return (data.one_hot - p).transpose() * data.x;
    }

    Preconditioner build_preconditioner(const Matrix &x, int num_classes, double eps) {
        if (!(eps > 0)) {
            throw Error(ErrorKind::InvalidArgument, "preconditioner eps must be positive");
        }
        const Matrix h = -0.25 * (x.transpose() * x);
        Preconditioner pre;
        pre.eps = eps;
        pre.b.resize(num_classes, x.cols());
        for (Eigen::Index j = 0; j < h.cols(); j++) {
            double acc = eps;
            for (Eigen::Index i = 0; i < h.rows(); i++) {
                acc += std::abs(h(i, j));
            }
            pre.b(0, j) = acc;
        }
        for (int k = 1; k < num_classes; k++) {
            pre.b.row(k) = pre.b.row(0);
        }
        pre.b = pre.b.cwiseInverse();
        return pre;
    }

    NagState NagState::zeros(int num_classes, int cols) {
        NagState s;
        s.v = Matrix::Zero(num_classes, cols);
        s.w = Matrix::Zero(num_classes, cols);
        s.alpha0 = 0.01;
        s.alpha1 = next_alpha(s.alpha0);
        s.count = 1;
        return s;
    }

    double next_alpha(double alpha0) {
        return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * alpha0 * alpha0));
    }

    NagState nag_step(NagState state, const Matrix &g, int n, StepRate rate) {
        if (g.rows() != state.w.rows() || g.cols() != state.w.cols()) {
            throw Error(ErrorKind::DimensionMismatch, "gradient shape differs from weights");
        }
        state.eta = (1.0 - state.alpha0) / state.alpha1;
        state.gamma = 1.0 / (static_cast<double>(n) * state.count);
        const double step = rate == StepRate::Quadratic ? 1.0 + state.gamma : state.gamma;
        Matrix w_temp = state.w + step * g;
        state.w = (1.0 - state.eta) * w_temp + state.eta * state.v;
        state.v = std::move(w_temp);
        state.alpha0 = state.alpha1;
        state.alpha1 = next_alpha(state.alpha0);
        state.count++;
        return state;
    }

    std::vector<int> predict(const Matrix &w, const Matrix &x) {
        const Matrix scores = x * w.transpose();
        std::vector<int> out(static_cast<size_t>(scores.rows()));
        for (Eigen::Index i = 0; i < scores.rows(); i++) {
            int best = 0;
            for (Eigen::Index k = 1; k < scores.cols(); k++) {
                if (scores(i, k) > scores(i, best)) {
                    best = static_cast<int>(k);
                }
            }
            out[static_cast<size_t>(i)] = best;
        }
        return out;
    }

    double precision(const Matrix &w, const Dataset &data) {
        check_dims(w, data);
        const std::vector<int> predicted = predict(w, data.x);
        int hits = 0;
        for (size_t i = 0; i < predicted.size(); i++) {
            hits += predicted[i] == data.labels[i] ? 1 : 0;
        }
        return data.n() == 0 ? 0.0 : static_cast<double>(hits) / data.n();
    }

    IterationMetrics evaluate_metrics(int iter, const Matrix &w, const Dataset &train_set, const Dataset *test_set) {
        const Dataset &loss_set = test_set ? *test_set : train_set;
        IterationMetrics m;
        m.iter = iter;
        m.precision_train = precision(w, train_set);
        m.precision_test = test_set ? precision(w, *test_set) : std::numeric_limits<double>::quiet_NaN();
        try {
            m.ln_l2 = sle_loss(w, loss_set, LossKind::SLE);
        } catch (const Error &e) {
            if (e.kind() != ErrorKind::DegenerateLikelihood) {
                throw;
            }
            m.ln_l2 = std::numeric_limits<double>::quiet_NaN();
        }
        m.ln_l_softmax = softmax_loglik(w, loss_set);
        return m;
    }

    TrainResult train(const Dataset &train_set, Optimizer optimizer, const Activation &activation,
                      const TrainOptions &options, const Dataset *test_set) {
        if (options.iterations < 0) {
            throw Error(ErrorKind::InvalidArgument, "iteration count must be non-negative");
        }
        if (test_set && (test_set->x.cols() != train_set.x.cols() || test_set->c() != train_set.c())) {
            throw Error(ErrorKind::DimensionMismatch, "test set shape differs from training set");
        }
        const int n = train_set.n();
        NagState state = NagState::zeros(train_set.c(), static_cast<int>(train_set.x.cols()));
        std::optional<Preconditioner> pre;
        if (optimizer == Optimizer::SigmoidNAGQG) {
            pre = build_preconditioner(train_set.x, train_set.c(), options.eps);
        }

        TrainResult result;
        if (options.record_metrics) {
            result.metrics.push_back(evaluate_metrics(0, state.w, train_set, test_set));
        }
        for (int it = 1; it <= options.iterations; it++) {
            Matrix g;
            StepRate rate = StepRate::Plain;
            switch (optimizer) {
                case Optimizer::RawNAG:
                    g = softmax_gradient(state.w, train_set);
                    break;
                case Optimizer::SigmoidNAG:
                    g = sle_gradient(state.w, train_set, activation);
                    break;
                case Optimizer::SigmoidNAGQG:
                    g = pre->b.cwiseProduct(sle_gradient(state.w, train_set, activation));
                    rate = StepRate::Quadratic;
                    break;
            }
            state = nag_step(std::move(state), g, n, rate);
            if (!state.w.allFinite()) {
                throw Error(ErrorKind::DegenerateLikelihood, "weights became non-finite at iteration " + std::to_string(it));
            }
            if (options.record_metrics) {
                result.metrics.push_back(evaluate_metrics(it, state.w, train_set, test_set));
            }
        }
        result.w = std::move(state.w);
        return result;
    }

}  // namespace hemlr
