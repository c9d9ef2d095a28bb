#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "hemlr/data.hpp"
#include "hemlr/he_emulator.hpp"
#include "hemlr/mlr.hpp"
#include "hemlr/sigmoid_approx.hpp"
#include "hemlr/vr_encoding.hpp"

namespace hemlr {

    /* Server-side state of one encrypted training run.
     *
     * x and y share one row tiling; w and b share one c x padded-width layout. v, the NAG companion of w,
     * is created on the server from w at the first iteration and is not uploaded.
     */
    struct EncryptedTrainingSession {
        PackedMatrix x;
        PackedMatrix y;
        PackedMatrix b;
        PackedMatrix w;
        std::optional<PackedMatrix> v;
        PolyApprox activation;
        int n = 0;
        int num_classes = 0;
        int iteration = 0;  // completed iterations
        double alpha0 = 0.01;
        double alpha1 = 0.0;

        int upload_count() const {
            return static_cast<int>(x.cts.size() + y.cts.size() + b.cts.size() + w.cts.size());
        }
    };

    enum class BootstrapPolicy { Never, OnExhaustion };

    BootstrapPolicy parse_bootstrap_policy(std::string_view name);

    // 2 * ceil(n / rows_per_ct) + 2 for a bias-augmented width of `cols`.
    int expected_upload_count(const HeParams &params, int n, int cols);

    // Levels one iteration takes from the weight ciphertext: two products of three levels each, the
    // polynomial (its degree), the preconditioner product and the NAG blend.
    int iteration_depth(const PolyApprox &activation);

    EncryptedTrainingSession client_encrypt(const Emulator &em, const Dataset &data, const Preconditioner &pre,
                                            const Matrix &w0, PolyApprox activation = reference_z3());

    // Evaluates the activation on every ciphertext of a team with Horner's rule; payload padding stays zero.
    PackedMatrix he_poly_eval(const Emulator &em, const PackedMatrix &z, const PolyApprox &poly);

    // One enhanced-NAG step: W <- blend(W + (1 + gamma) B (.) (Y - act(X W^T))^T X, V).
    EncryptedTrainingSession he_iteration(const Emulator &em, EncryptedTrainingSession session);

    struct TraceReport {
        int iterations = 0;
        OpCounts counts;
        int depth_per_iteration = 0;
        std::vector<int> weight_levels;  // level of W after each iteration, entry 0 before the first
        std::int64_t peak_payload_count = 0;
        int max_depth = 0;
    };

    struct ServerResult {
        EncryptedTrainingSession session;
        TraceReport report;
    };

    // Runs `iterations` steps. With OnExhaustion, W and V are bootstrapped whenever W cannot afford another
    // iteration; with Never the LevelExhausted error propagates.
    ServerResult server_train(const Emulator &em, EncryptedTrainingSession session, int iterations,
                              BootstrapPolicy policy);

    struct EvalReport {
        Matrix w;
        double precision = 0;
        double ln_l2 = 0;  // NaN when degenerate
        double ln_l_softmax = 0;
    };

    EvalReport client_decrypt_eval(const Emulator &em, const EncryptedTrainingSession &session, const Dataset &test);

    // Plaintext mirror of the encrypted run: SigmoidNAGQG with the session's activation and no clamping.
    Matrix plaintext_reference(const Dataset &data, const PolyApprox &activation, int iterations, double eps = 1e-10);

}  // namespace hemlr
