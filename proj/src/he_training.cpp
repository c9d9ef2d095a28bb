#include "hemlr/he_training.hpp"

#include <algorithm>
#include <string>

#include "hemlr/error.hpp"

namespace hemlr {

    namespace {

        std::vector<double> region(const Emulator &em, const PackedMatrix &p, size_t ct_index, double value) {
            std::vector<double> k(static_cast<size_t>(em.slots()), 0.0);
            const int start = static_cast<int>(ct_index) * p.rows_per_ct;
            const int rows = std::min(p.rows_per_ct, p.rows - start);
            for (int r = 0; r < rows; r++) {
                for (int c = 0; c < p.cols; c++) {
                    k[static_cast<size_t>(r * p.padded_cols + c)] = value;
                }
            }
            return k;
        }

        CiphertextSim aligned_add(const Emulator &em, const CiphertextSim &a, const CiphertextSim &b) {
            if (a.level() == b.level()) {
                return em.add(a, b);
            }
            auto [x, y] = em.level_align(a, b);
            return em.add(x, y);
        }

        CiphertextSim aligned_sub(const Emulator &em, const CiphertextSim &a, const CiphertextSim &b) {
            if (a.level() == b.level()) {
                return em.sub(a, b);
            }
            auto [x, y] = em.level_align(a, b);
            return em.sub(x, y);
        }

        CiphertextSim aligned_mult(const Emulator &em, const CiphertextSim &a, const CiphertextSim &b) {
            if (a.level() == b.level()) {
                return em.mult(a, b);
            }
            auto [x, y] = em.level_align(a, b);
            return em.mult(x, y);
        }

    }  // namespace

    BootstrapPolicy parse_bootstrap_policy(std::string_view name) {
        if (name == "never") return BootstrapPolicy::Never;
        if (name == "on-exhaustion") return BootstrapPolicy::OnExhaustion;
        throw Error(ErrorKind::InvalidArgument, "unknown bootstrap policy '" + std::string(name) + "'");
    }

    int expected_upload_count(const HeParams &params, int n, int cols) {
        const int rows_per_ct = params.slots() / next_pow2(cols);
        return 2 * ((n + rows_per_ct - 1) / rows_per_ct) + 2;
    }

    int iteration_depth(const PolyApprox &activation) {
        return 3 + activation.degree() + 3 + 1 + 1;
    }

    EncryptedTrainingSession client_encrypt(const Emulator &em, const Dataset &data, const Preconditioner &pre,
                                            const Matrix &w0, PolyApprox activation) {
        const int cols = static_cast<int>(data.x.cols());
        const int width = next_pow2(cols);
        if (width > em.slots()) {
            throw Error(ErrorKind::CapacityExceeded, std::to_string(cols) + " columns pad to " + std::to_string(width) +
                                                         ", more than " + std::to_string(em.slots()) + " slots");
        }
        const int rows_per_ct = em.slots() / width;
        if (data.c() > rows_per_ct || data.c() > width) {
            throw Error(ErrorKind::CapacityExceeded,
                        "class count " + std::to_string(data.c()) + " does not fit the weight ciphertext");
        }
        if (w0.rows() != data.c() || w0.cols() != cols || pre.b.rows() != data.c() || pre.b.cols() != cols) {
            throw Error(ErrorKind::DimensionMismatch, "initial weights or preconditioner have the wrong shape");
        }
        if (activation.degree() < 1) {
            throw Error(ErrorKind::InvalidArgument, "activation polynomial needs degree >= 1");
        }
        EncryptedTrainingSession s;
        s.x = pack(em, data.x, false, width);
        s.y = pack(em, data.one_hot, false, width);
        s.b = pack(em, pre.b, false, width);
        s.w = pack(em, w0, false, width);
        s.activation = std::move(activation);
        s.n = data.n();
        s.num_classes = data.c();
        s.iteration = 0;
        s.alpha0 = 0.01;
        s.alpha1 = next_alpha(s.alpha0);
        return s;
    }

    PackedMatrix he_poly_eval(const Emulator &em, const PackedMatrix &z, const PolyApprox &poly) {
        const auto &a = poly.coeffs();
        const int deg = poly.degree();
        if (deg < 1) {
            throw Error(ErrorKind::InvalidArgument, "ciphertext polynomial evaluation needs degree >= 1");
        }
        PackedMatrix out = z;
        for (size_t i = 0; i < z.cts.size(); i++) {
            const CiphertextSim &x = z.cts[i];
            CiphertextSim t = em.rescale(em.cmult(region(em, z, i, a[static_cast<size_t>(deg)]), x));
            if (a[static_cast<size_t>(deg - 1)] != 0.0) {
                t = em.add_const(t, region(em, z, i, a[static_cast<size_t>(deg - 1)]));
            }
            for (int k = deg - 2; k >= 0; k--) {
                t = em.rescale(aligned_mult(em, t, x));
                if (a[static_cast<size_t>(k)] != 0.0) {
                    t = em.add_const(t, region(em, z, i, a[static_cast<size_t>(k)]));
                }
            }
            out.cts[i] = t;
        }
        return out;
    }

    EncryptedTrainingSession he_iteration(const Emulator &em, EncryptedTrainingSession s) {
        const int count = s.iteration + 1;
        const double eta = (1.0 - s.alpha0) / s.alpha1;
        const double gamma = 1.0 / (static_cast<double>(s.n) * count);
        if (!s.v) {
            s.v = s.w;
        }

        // Z = act(X W^T), n x c on the row tiling of X.
        const PackedMatrix scores = dvr_matmul(em, s.x, as_transposed(s.w));
        const PackedMatrix act = he_poly_eval(em, scores, s.activation);
        PackedMatrix diff = act;
        for (size_t i = 0; i < diff.cts.size(); i++) {
            diff.cts[i] = aligned_sub(em, s.y.cts[i], act.cts[i]);
        }

        // g = (Y - Z)^T X, c x (1+d) in the weight layout.
        const PackedMatrix grad = dvr_matmul(em, as_transposed(diff), s.x);

        const CiphertextSim scaled_b = em.rescale(em.cmult(1.0 + gamma, s.b.cts[0]));
        const CiphertextSim step = em.rescale(aligned_mult(em, scaled_b, grad.cts[0]));
        const CiphertextSim w_temp = aligned_add(em, s.w.cts[0], step);
        const CiphertextSim blended = aligned_add(em, em.rescale(em.cmult(1.0 - eta, w_temp)),
                                                  em.rescale(em.cmult(eta, s.v->cts[0])));

        s.v->cts[0] = w_temp;
        s.w.cts[0] = blended;
        s.alpha0 = s.alpha1;
        s.alpha1 = next_alpha(s.alpha0);
        s.iteration = count;
        return s;
    }

    ServerResult server_train(const Emulator &em, EncryptedTrainingSession session, int iterations,
                              BootstrapPolicy policy) {
        if (iterations < 1) {
            throw Error(ErrorKind::InvalidArgument, "server_train needs at least one iteration");
        }
        const OpCounts before = em.trace().snapshot();
        const int depth = iteration_depth(session.activation);
        TraceReport report;
        report.depth_per_iteration = depth;
        report.weight_levels.push_back(session.w.level());
        for (int it = 0; it < iterations; it++) {
            if (policy == BootstrapPolicy::OnExhaustion && session.w.level() < depth) {
                session.w.cts[0] = em.bootstrap(session.w.cts[0]);
                if (session.v) {
                    session.v->cts[0] = em.bootstrap(session.v->cts[0]);
                }
            }
            session = he_iteration(em, std::move(session));
            report.iterations++;
            report.weight_levels.push_back(session.w.level());
        }
        report.counts = em.trace().snapshot() - before;
        report.peak_payload_count = em.trace().peak_payloads();
        report.max_depth = em.trace().max_depth();
        return {std::move(session), std::move(report)};
    }

    EvalReport client_decrypt_eval(const Emulator &em, const EncryptedTrainingSession &session, const Dataset &test) {
        EvalReport r;
        r.w = unpack(em, session.w);
        const IterationMetrics m = evaluate_metrics(session.iteration, r.w, test, &test);
        r.precision = m.precision_test;
        r.ln_l2 = m.ln_l2;
        r.ln_l_softmax = m.ln_l_softmax;
        return r;
    }

    Matrix plaintext_reference(const Dataset &data, const PolyApprox &activation, int iterations, double eps) {
        TrainOptions options;
        options.iterations = iterations;
        options.eps = eps;
        options.record_metrics = false;
        return train(data, Optimizer::SigmoidNAGQG, Activation::polynomial(activation, false), options).w;
    }

}  // namespace hemlr
