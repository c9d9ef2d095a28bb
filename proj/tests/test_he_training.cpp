#include <cmath>
#include <thread>

#include "hemlr/he_training.hpp"
#include "hemlr/serialization.hpp"
#include "support.hpp"

namespace hemlr {
    namespace {

        using testing::max_abs_diff;
        using testing::TempDir;

        EncryptedTrainingSession encrypt_zero(const Emulator &em, const Dataset &d) {
            const Preconditioner pre = build_preconditioner(d.x, d.c());
            return client_encrypt(em, d, pre, Matrix::Zero(d.c(), d.x.cols()));
        }

        TEST(ClientEncrypt, six_uploads_under_preset) {
            const Emulator em;
            const Dataset d = synth_dataset(1, 128, 401, 10);
            const EncryptedTrainingSession s = encrypt_zero(em, d);
            EXPECT_EQ(s.x.cts.size(), 2u);
            EXPECT_EQ(s.y.cts.size(), 2u);
            EXPECT_EQ(s.b.cts.size(), 1u);
            EXPECT_EQ(s.w.cts.size(), 1u);
            EXPECT_EQ(s.upload_count(), 6);
            EXPECT_FALSE(s.x.transposed);
            EXPECT_EQ(s.w.padded_cols, s.b.padded_cols);
            EXPECT_EQ(s.w.rows, 10);
            EXPECT_EQ(s.b.rows, 10);
            EXPECT_EQ(s.y.rows_per_ct, s.x.rows_per_ct);
            EXPECT_FALSE(s.v.has_value());
        }

        TEST(ClientEncrypt, upload_count_formula) {
            const Emulator em;
            for (int n : {64, 128, 256}) {
                const Dataset d = synth_dataset(2, n, 401, 10);
                const int expect = 2 * ((n + 63) / 64) + 2;
                EXPECT_EQ(encrypt_zero(em, d).upload_count(), expect) << "n = " << n;
                EXPECT_EQ(expected_upload_count(em.params(), n, 402), expect);
            }
        }

        TEST(ClientEncrypt, zero_initial_weights) {
            const Emulator em;
            const Dataset d = synth_dataset(3, 40, 9, 4);
            const EncryptedTrainingSession s = encrypt_zero(em, d);
            EXPECT_EQ(unpack(em, s.w), Matrix::Zero(4, 10));
            EXPECT_EQ(unpack(em, s.x), d.x);
            EXPECT_EQ(unpack(em, s.y), d.one_hot);
        }

        TEST(ClientEncrypt, capacity_exceeded) {
            HeParams p;
            p.log_n = 6;
            const Emulator em(p);
            const Dataset wide = synth_dataset(4, 10, 40, 2);
            EXPECT_HEMLR_ERROR(encrypt_zero(em, wide), ErrorKind::CapacityExceeded);
            const Dataset many = synth_dataset(4, 40, 20, 3);
            EXPECT_HEMLR_ERROR(encrypt_zero(em, many), ErrorKind::CapacityExceeded);
        }

        TEST(HeIteration, one_step_matches_plaintext) {
            const Emulator em;
            const Dataset d = synth_dataset(5, 16, 7, 3);
            const EncryptedTrainingSession s = he_iteration(em, encrypt_zero(em, d));
            EXPECT_EQ(s.iteration, 1);
            EXPECT_LE(max_abs_diff(unpack(em, s.w), plaintext_reference(d, reference_z3(), 1)), 1e-6);
        }

        TEST(HePolyEval, matches_plain_polynomial_and_keeps_padding) {
            const Emulator em;
            const Dataset d = synth_dataset(6, 70, 5, 4);
            const PackedMatrix z = pack(em, d.x, false, 8);
            const PolyApprox z3 = reference_z3();
            const PackedMatrix out = he_poly_eval(em, z, z3);
            EXPECT_LE(max_abs_diff(unpack(em, out), z3(d.x)), 1e-12);
            EXPECT_EQ(out.level(), z.level() - 3);
            for (size_t i = 0; i < out.cts.size(); i++) {
                const auto s = out.cts[i].slots();
                for (int slot = 0; slot < em.slots(); slot++) {
                    const int row = static_cast<int>(i) * out.rows_per_ct + slot / out.padded_cols;
                    if (slot % out.padded_cols >= out.cols || row >= out.rows) {
                        ASSERT_EQ(s[static_cast<size_t>(slot)], 0.0);
                    }
                }
            }
        }

        TEST(ServerTrain, equivalence_one_and_two_iterations) {
            const Emulator em;
            for (std::uint64_t seed : {7u, 8u}) {
                const Dataset d = synth_dataset(seed, 128, 401, 10);
                for (int k : {1, 2}) {
                    const ServerResult r = server_train(em, encrypt_zero(em, d), k, BootstrapPolicy::Never);
                    EXPECT_LE(max_abs_diff(unpack(em, r.session.w), plaintext_reference(d, reference_z3(), k)), 1e-6)
                        << "seed " << seed << " k " << k;
                }
            }
        }

        TEST(ServerTrain, budget_two_iterations_fit_three_do_not) {
            const Emulator em;
            const Dataset d = synth_dataset(9, 128, 401, 10);
            const ServerResult ok = server_train(em, encrypt_zero(em, d), 2, BootstrapPolicy::Never);
            EXPECT_EQ(ok.report.counts[OpKind::Bootstrap], 0u);
            EXPECT_EQ(ok.report.iterations, 2);
            EXPECT_EQ(ok.report.weight_levels, (std::vector<int>{22, 11, 0}));
            EXPECT_HEMLR_ERROR(server_train(em, encrypt_zero(em, d), 3, BootstrapPolicy::Never),
                               ErrorKind::LevelExhausted);
            EXPECT_HEMLR_ERROR(he_iteration(em, ok.session), ErrorKind::LevelExhausted);
        }

        TEST(ServerTrain, depth_is_data_independent) {
            const Emulator em;
            const int depth = iteration_depth(reference_z3());
            EXPECT_EQ(depth, 11);
            for (std::uint64_t seed : {10u, 11u}) {
                const Dataset d = synth_dataset(seed, 20 + static_cast<int>(seed), 6, 3);
                const ServerResult r = server_train(em, encrypt_zero(em, d), 2, BootstrapPolicy::Never);
                for (size_t i = 1; i < r.report.weight_levels.size(); i++) {
                    EXPECT_EQ(r.report.weight_levels[i - 1] - r.report.weight_levels[i], depth);
                }
                EXPECT_EQ(r.report.depth_per_iteration, depth);
            }
            EXPECT_EQ(em.params().max_level() / depth, 2);
        }

        TEST(ServerTrain, bootstrap_policy) {
            const Emulator em;
            const Dataset d = synth_dataset(12, 24, 5, 3);
            const ServerResult r = server_train(em, encrypt_zero(em, d), 10, BootstrapPolicy::OnExhaustion);
            EXPECT_GE(r.report.counts[OpKind::Bootstrap], 1u);
            EXPECT_EQ(r.session.iteration, 10);
            EXPECT_LE(max_abs_diff(unpack(em, r.session.w), plaintext_reference(d, reference_z3(), 10)), 1e-6);
            EXPECT_HEMLR_ERROR(server_train(em, encrypt_zero(em, d), 10, BootstrapPolicy::Never),
                               ErrorKind::LevelExhausted);
            EXPECT_HEMLR_ERROR(server_train(em, encrypt_zero(em, d), 0, BootstrapPolicy::Never),
                               ErrorKind::InvalidArgument);
            EXPECT_EQ(parse_bootstrap_policy("on-exhaustion"), BootstrapPolicy::OnExhaustion);
            EXPECT_HEMLR_ERROR(parse_bootstrap_policy("sometimes"), ErrorKind::InvalidArgument);
        }

        TEST(ClientDecryptEval, zero_model_predicts_class_zero) {
            const Emulator em;
            const Dataset train = synth_dataset(13, 30, 4, 3);
            const Dataset test = synth_dataset(14, 50, 4, 3);
            const EvalReport r = client_decrypt_eval(em, encrypt_zero(em, train), test);
            const double zeros = static_cast<double>(std::count(test.labels.begin(), test.labels.end(), 0));
            EXPECT_DOUBLE_EQ(r.precision, zeros / 50);
            EXPECT_NEAR(r.ln_l2, 50 * 3 * std::log(0.5), 1e-9);
        }

        TEST(ClientDecryptEval, equals_plaintext_metrics) {
            const Emulator em;
            const Dataset train = synth_dataset(15, 64, 8, 4);
            const Dataset test = synth_dataset(16, 40, 8, 4);
            const ServerResult r = server_train(em, encrypt_zero(em, train), 2, BootstrapPolicy::Never);
            const EvalReport enc = client_decrypt_eval(em, r.session, test);
            const Matrix w = plaintext_reference(train, reference_z3(), 2);
            EXPECT_EQ(enc.precision, precision(w, test));
            EXPECT_NEAR(enc.ln_l2, sle_loss(w, test, LossKind::SLE), 1e-6);
            EXPECT_NEAR(enc.ln_l_softmax, softmax_loglik(w, test), 1e-6);
        }

        TEST(Checkpoint, round_trip_and_resume) {
            const Emulator em;
            const Dataset d = synth_dataset(17, 20, 5, 3);
            const EncryptedTrainingSession one = he_iteration(em, encrypt_zero(em, d));
            TempDir dir("ckpt");
            save_checkpoint(dir.path(), em, one);
            const OpCounts at_save = em.trace().snapshot();
            const LoadedCheckpoint loaded = load_checkpoint(dir.path(), em);
            EXPECT_EQ(loaded.session.iteration, 1);
            EXPECT_EQ(loaded.session.w.level(), one.w.level());
            ASSERT_TRUE(loaded.session.v.has_value());
            EXPECT_EQ(unpack(em, loaded.session.w), unpack(em, one.w));
            EXPECT_EQ(loaded.counts_at_save, at_save);
            const EncryptedTrainingSession resumed = he_iteration(em, loaded.session);
            const EncryptedTrainingSession direct = he_iteration(em, one);
            EXPECT_EQ(unpack(em, resumed.w), unpack(em, direct.w));

            HeParams other;
            other.log_n = 15;
            EXPECT_HEMLR_ERROR(load_checkpoint(dir.path(), Emulator(other)), ErrorKind::InvalidArgument);
            EXPECT_EQ(checkpoint_params(dir.path()).log_n, 16);
        }

        TEST(Sessions, independent_sessions_run_concurrently) {
            const Dataset d = synth_dataset(18, 32, 6, 3);
            const Matrix expect = plaintext_reference(d, reference_z3(), 2);
            std::vector<Matrix> got(3);
            std::vector<std::thread> pool;
            for (size_t i = 0; i < got.size(); i++) {
                pool.emplace_back([&, i] {
                    const Emulator em;
                    got[i] = unpack(em, server_train(em, encrypt_zero(em, d), 2, BootstrapPolicy::Never).session.w);
                });
            }
            for (auto &t : pool) t.join();
            for (const auto &w : got) EXPECT_LE(max_abs_diff(w, expect), 1e-6);
        }

    }  // namespace
}  // namespace hemlr
