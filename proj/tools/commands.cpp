#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "hemlr/data.hpp"
#include "hemlr/error.hpp"
#include "hemlr/he_emulator.hpp"
#include "hemlr/he_training.hpp"
#include "hemlr/mlr.hpp"
#include "hemlr/serialization.hpp"
#include "hemlr/sigmoid_approx.hpp"

namespace hemlr::cli {

    namespace fs = std::filesystem;

    namespace {

        struct RunConfig {
            std::string train_path;
            std::string test_path;
            std::string optimizer = "sigmoid-nag-qg";
            std::string loss = "sle";
            std::string activation = "z3";
            std::string policy = "never";
            std::string out = ".";
            std::string model_path;
            std::string checkpoint;
            int iters = 2;
            double eps = 1e-10;
            double lambda0 = 128.0;
            double lambda1 = 1.0;
            int degree = 3;
            double lo = -8.0;
            double hi = 8.0;
            int log_n = 16;
            int log_q = 990;
            int log_p = 45;
            std::uint64_t seed = 1;
            int n = 0;
            int d = 0;
            int c = 0;
            bool minmax = false;
        };

        int exit_code_for(ErrorKind kind) {
            switch (kind) {
                case ErrorKind::LevelExhausted:
                    return kBudgetExhausted;
                case ErrorKind::InvalidArgument:
                case ErrorKind::SingularSystem:
                    return kConfigError;
                default:
                    return kDataError;
            }
        }

        void add_data_flags(CLI::App *cmd, RunConfig &cfg) {
            cmd->add_option("--train", cfg.train_path, "training CSV (label first, no header)");
            cmd->add_option("--test", cfg.test_path, "testing CSV");
            cmd->add_option("--seed", cfg.seed, "seed for the synthetic set used when --train is absent");
            cmd->add_option("--n", cfg.n, "synthetic rows");
            cmd->add_option("--d", cfg.d, "synthetic features");
            cmd->add_option("--c", cfg.c, "synthetic classes");
            cmd->add_flag("--minmax", cfg.minmax, "min-max scale features with the training range");
        }

        void add_fit_flags(CLI::App *cmd, RunConfig &cfg) {
            cmd->add_option("--lambda0", cfg.lambda0, "value-fit weight");
            cmd->add_option("--lambda1", cfg.lambda1, "derivative-fit weight");
            cmd->add_option("--degree", cfg.degree, "surrogate degree");
        }

        void add_he_flags(CLI::App *cmd, RunConfig &cfg) {
            cmd->add_option("--logn", cfg.log_n, "log2 ring dimension");
            cmd->add_option("--logq", cfg.log_q, "log2 ciphertext modulus");
            cmd->add_option("--logp", cfg.log_p, "log2 scale per level");
            cmd->add_option("--policy", cfg.policy, "bootstrap policy: never or on-exhaustion");
            cmd->add_option("--checkpoint", cfg.checkpoint, "directory for the final session checkpoint");
        }

        PolyApprox fitted_surrogate(const RunConfig &cfg) {
            if (cfg.degree < 1) {
                throw Error(ErrorKind::InvalidArgument, "--degree must be >= 1");
            }
            if (!(cfg.lo < cfg.hi)) {
                throw Error(ErrorKind::InvalidArgument, "empty fit domain");
            }
            return fit_sigmoid_surrogate(cfg.degree, {cfg.lambda0, cfg.lambda1}, {cfg.lo, cfg.hi});
        }

        Activation pick_activation(const RunConfig &cfg) {
            if (cfg.activation == "z3") return Activation::polynomial(reference_z3());
            if (cfg.activation == "fit") return Activation::polynomial(fitted_surrogate(cfg));
            if (cfg.activation == "exact") return Activation::exact();
            throw Error(ErrorKind::InvalidArgument, "unknown activation '" + cfg.activation + "'");
        }

        struct Splits {
            Dataset train;
            std::optional<Dataset> test;
        };

        Splits load_splits(const RunConfig &cfg, int n, int d, int c) {
            Splits s;
            if (cfg.train_path.empty()) {
                s.train = synth_dataset(cfg.seed, cfg.n > 0 ? cfg.n : n, cfg.d > 0 ? cfg.d : d, cfg.c > 0 ? cfg.c : c);
            } else {
                s.train = load_csv(cfg.train_path);
            }
            if (!cfg.test_path.empty()) {
                CsvOptions options;
                options.num_classes = s.train.c();
                s.test = load_csv(cfg.test_path, options);
                if (s.test->d() != s.train.d()) {
                    throw Error(ErrorKind::DimensionMismatch, "testing set has " + std::to_string(s.test->d()) +
                                                                  " features, training set " +
                                                                  std::to_string(s.train.d()));
                }
            }
            if (cfg.minmax) {
                const FeatureRange range = fit_minmax(s.train);
                apply_minmax(s.train, range);
                if (s.test) {
                    apply_minmax(*s.test, range);
                }
            }
            return s;
        }

        fs::path out_dir(const RunConfig &cfg) {
            fs::path dir(cfg.out);
            fs::create_directories(dir);
            return dir;
        }

        int cmd_fit_sigmoid(const RunConfig &cfg, std::ostream &out) {
            if (cfg.lambda0 < 0 || cfg.lambda1 < 0 || cfg.lambda0 + cfg.lambda1 <= 0) {
                throw Error(ErrorKind::InvalidArgument, "lambda0 and lambda1 must be >= 0 and not both zero");
            }
            out << poly_to_json(fitted_surrogate(cfg)).dump() << '\n';
            return kOk;
        }

        int cmd_train(const RunConfig &cfg, std::ostream &out) {
            if (cfg.iters < 0) {
                throw Error(ErrorKind::InvalidArgument, "--iters must be >= 0");
            }
            const Optimizer optimizer = parse_optimizer(cfg.optimizer);
            const LossKind loss_kind = parse_loss_kind(cfg.loss);
            const Activation act = pick_activation(cfg);
            const Splits s = load_splits(cfg, 100, 10, 10);

            TrainOptions options;
            options.iterations = cfg.iters;
            options.eps = cfg.eps;
            const TrainResult result = train(s.train, optimizer, act, options, s.test ? &*s.test : nullptr);

            const fs::path dir = out_dir(cfg);
            write_metrics_csv(dir / "metrics.csv", result.metrics);
            write_json(dir / "model.json", model_to_json(result.w));

            const Dataset &eval_set = s.test ? *s.test : s.train;
            Json summary = {{"iterations", cfg.iters},
                            {"optimizer", to_string(optimizer)},
                            {"precision_train", result.metrics.back().precision_train},
                            {"loss", to_string(loss_kind)}};
            if (s.test) {
                summary["precision_test"] = result.metrics.back().precision_test;
            }
            try {
                summary["loss_value"] = loss(result.w, eval_set, loss_kind);
            } catch (const Error &e) {
                if (e.kind() != ErrorKind::DegenerateLikelihood) throw;
                summary["loss_value"] = nullptr;
            }
            out << summary.dump() << '\n';
            return kOk;
        }

        int cmd_train_encrypted(const RunConfig &cfg, std::ostream &out) {
            if (cfg.iters < 1) {
                throw Error(ErrorKind::InvalidArgument, "--iters must be >= 1");
            }
            HeParams params;
            params.log_n = cfg.log_n;
            params.log_q = cfg.log_q;
            params.log_p = cfg.log_p;
            params.validate();
            const BootstrapPolicy policy = parse_bootstrap_policy(cfg.policy);
            const Activation act = pick_activation(cfg);
            if (!act.is_polynomial()) {
                throw Error(ErrorKind::InvalidArgument, "encrypted training needs a polynomial activation");
            }
            const Splits s = load_splits(cfg, 128, 401, 10);

            const Emulator em(params);
            const Preconditioner pre = build_preconditioner(s.train.x, s.train.c(), cfg.eps);
            const Matrix w0 = Matrix::Zero(s.train.c(), s.train.x.cols());
            EncryptedTrainingSession session = client_encrypt(em, s.train, pre, w0, *act.poly());
            const int uploads = session.upload_count();
            ServerResult result = server_train(em, std::move(session), cfg.iters, policy);

            const fs::path dir = out_dir(cfg);
            const Matrix w = unpack(em, result.session.w);
            const Dataset *test = s.test ? &*s.test : nullptr;
            std::vector<IterationMetrics> metrics{evaluate_metrics(0, w0, s.train, test),
                                                  evaluate_metrics(cfg.iters, w, s.train, test)};
            write_metrics_csv(dir / "metrics.csv", metrics);
            write_json(dir / "model.json", model_to_json(w));
            Json trace = trace_to_json(result.report);
            trace["uploads"] = uploads;
            write_json(dir / "trace.json", trace);
            if (!cfg.checkpoint.empty()) {
                save_checkpoint(cfg.checkpoint, em, result.session);
            }
            out << trace.dump() << '\n';
            return kOk;
        }

        int cmd_evaluate(const RunConfig &cfg, std::ostream &out) {
            if (cfg.model_path.empty() || cfg.test_path.empty()) {
                throw Error(ErrorKind::InvalidArgument, "evaluate needs --model and --test");
            }
            const Matrix w = model_from_json(read_json(cfg.model_path));
            CsvOptions options;
            options.num_classes = static_cast<int>(w.rows());
            Dataset test = load_csv(cfg.test_path, options);
            if (test.x.cols() != w.cols()) {
                throw Error(ErrorKind::DimensionMismatch, "model expects " + std::to_string(w.cols() - 1) +
                                                              " features, data has " + std::to_string(test.d()));
            }
            if (cfg.minmax) {
                apply_minmax(test, fit_minmax(test));
            }
            const IterationMetrics m = evaluate_metrics(0, w, test, &test);
            Json report = {{"precision", m.precision_test}, {"lnL_softmax", m.ln_l_softmax}};
            report["lnL2"] = std::isnan(m.ln_l2) ? Json(nullptr) : Json(m.ln_l2);
            out << report.dump() << '\n';
            return kOk;
        }

        int cmd_synth(const RunConfig &cfg) {
            const int n = cfg.n > 0 ? cfg.n : 100;
            const int d = cfg.d > 0 ? cfg.d : 10;
            if (cfg.c < 2) {
                throw Error(ErrorKind::InvalidArgument, "--c must be >= 2");
            }
            write_csv(cfg.out, synth_dataset(cfg.seed, n, d, cfg.c));
            return kOk;
        }

    }  // namespace

    int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
        RunConfig cfg;
        CLI::App app{"Multiclass logistic regression over an emulated leveled HE scheme", "hemlr"};
        app.require_subcommand(1);

        auto *fit = app.add_subcommand("fit-sigmoid", "fit the polynomial sigmoid surrogate, print JSON");
        add_fit_flags(fit, cfg);
        fit->add_option("--lo", cfg.lo, "domain lower end");
        fit->add_option("--hi", cfg.hi, "domain upper end");

        auto *tr = app.add_subcommand("train", "plaintext training");
        add_data_flags(tr, cfg);
        add_fit_flags(tr, cfg);
        tr->add_option("--iters", cfg.iters, "iterations");
        tr->add_option("--optimizer", cfg.optimizer, "raw-nag, sigmoid-nag or sigmoid-nag-qg");
        tr->add_option("--loss", cfg.loss, "loss reported in the summary");
        tr->add_option("--activation", cfg.activation, "z3, fit or exact");
        tr->add_option("--eps", cfg.eps, "preconditioner epsilon");
        tr->add_option("--out", cfg.out, "output directory");

        auto *enc = app.add_subcommand("train-encrypted", "training over emulated ciphertexts");
        add_data_flags(enc, cfg);
        add_fit_flags(enc, cfg);
        add_he_flags(enc, cfg);
        enc->add_option("--iters", cfg.iters, "iterations");
        enc->add_option("--activation", cfg.activation, "z3 or fit");
        enc->add_option("--eps", cfg.eps, "preconditioner epsilon");
        enc->add_option("--out", cfg.out, "output directory");

        auto *ev = app.add_subcommand("evaluate", "score a saved model on a CSV");
        ev->add_option("--model", cfg.model_path, "model JSON");
        ev->add_option("--test", cfg.test_path, "testing CSV");
        ev->add_flag("--minmax", cfg.minmax, "min-max scale features with the testing range");

        auto *syn = app.add_subcommand("synth", "write a synthetic Gaussian-cluster CSV");
        syn->add_option("--seed", cfg.seed, "RNG seed");
        syn->add_option("--n", cfg.n, "rows");
        syn->add_option("--d", cfg.d, "features");
        syn->add_option("--c", cfg.c, "classes")->required();
        syn->add_option("--out", cfg.out, "output CSV")->required();

        try {
            std::vector<std::string> reversed(args.rbegin(), args.rend());
            app.parse(reversed);
        } catch (const CLI::ParseError &e) {
            const int code = app.exit(e, out, err);
            return code == 0 ? kOk : kConfigError;
        }

        try {
            if (*fit) return cmd_fit_sigmoid(cfg, out);
            if (*tr) return cmd_train(cfg, out);
            if (*enc) return cmd_train_encrypted(cfg, out);
            if (*ev) return cmd_evaluate(cfg, out);
            if (*syn) return cmd_synth(cfg);
        } catch (const Error &e) {
            err << "hemlr: " << e.what() << '\n';
            return exit_code_for(e.kind());
        } catch (const std::exception &e) {
            err << "hemlr: " << e.what() << '\n';
            return kDataError;
        }
        return kConfigError;
    }

}  // namespace hemlr::cli
