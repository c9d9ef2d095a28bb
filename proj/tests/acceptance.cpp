// Runs each acceptance criterion at its stated tolerance and prints one PASS/FAIL line per criterion.

#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hemlr/data.hpp"
#include "hemlr/error.hpp"
#include "hemlr/he_training.hpp"
#include "hemlr/mlr.hpp"
#include "hemlr/vr_encoding.hpp"
#include "oracles.hpp"

namespace {

    using namespace hemlr;
    using Clock = std::chrono::steady_clock;

    struct Outcome {
        bool pass = false;
        std::string detail;
    };

    struct Criterion {
        std::string name;
        double time_limit_s;  // 0: none
        std::function<Outcome()> run;
    };

    std::string fmt(double v) {
        std::ostringstream s;
        s << std::setprecision(12) << v;
        return s.str();
    }

    std::string cli_path;

    Outcome z3_reproduction() {
        const std::string cmd = cli_path + " fit-sigmoid --lambda0 128 --lambda1 1 --degree 3 --lo -8 --hi 8";
        FILE *pipe = popen(cmd.c_str(), "r");
        if (!pipe) {
            return {false, "could not start " + cmd};
        }
        std::string text;
        std::array<char, 512> buf{};
        while (fgets(buf.data(), buf.size(), pipe)) text += buf.data();
        const int status = pclose(pipe);
        if (status != 0) {
            return {false, "fit-sigmoid exited with status " + std::to_string(status)};
        }
        const auto coeffs = nlohmann::json::parse(text).at("coeffs").get<std::vector<double>>();
        const std::array<double, 4> target{0.5, 0.106795345032, 0.0, -0.000385032598};
        if (coeffs.size() != 4) {
            return {false, "expected 4 coefficients"};
        }
        double worst = 0.0;
        std::string got;
        for (size_t k = 0; k < 4; k++) {
            worst = std::max(worst, std::abs(coeffs[k] - target[k]));
            got += (k ? ", " : "") + fmt(coeffs[k]);
        }
        return {worst <= 1e-6, "coeffs [" + got + "], max deviation " + fmt(worst) + " (tol 1e-6)"};
    }

    Outcome encoding_oracle() {
        const auto suite = oracle::random_matmul_suite(20240, 500);
        const Emulator em;
        const Dataset d = synth_dataset(42, 128, 401, 10);
        std::mt19937_64 gen(42);
        const Matrix w = oracle::random_matrix(gen, 10, 402);
        const Matrix z =
            unpack(em, dvr_matmul(em, pack(em, d.x), as_transposed(pack(em, w, false, 512))));
        const double big = (z - d.x * w.transpose()).cwiseAbs().maxCoeff();
        const Matrix e = oracle::random_matrix(gen, 128, 10);
        const Matrix g = unpack(em, dvr_matmul(em, as_transposed(pack(em, e, false, 512)), pack(em, d.x)));
        const double big_t = (g - e.transpose() * d.x).cwiseAbs().maxCoeff();
        const double worst = std::max({suite.worst, big, big_t});
        return {suite.cases >= 500 && worst <= 1e-9,
                std::to_string(suite.cases) + " random cases + 128x402 x 402x10 both orientations, max error " +
                    fmt(worst) + " (tol 1e-9)"};
    }

    Outcome op_count_contracts() {
        bool ok = true;
        int checked = 0;
        for (int log_n : {4, 8, 16}) {
            HeParams p;
            p.log_n = log_n;
            const Emulator em(p);
            std::mt19937_64 gen(static_cast<std::uint64_t>(log_n));
            for (int width = 2; width <= std::min(512, em.slots()); width *= 2) {
                const PackedMatrix m = pack(em, oracle::random_matrix(gen, std::min(3, em.slots() / width), width));
                auto before = em.trace().snapshot();
                (void)col_shift_complete(em, m);
                const OpCounts shift = em.trace().snapshot() - before;
                OpCounts expect;
                expect[OpKind::Rot] = 2;
                expect[OpKind::CMult] = 2;
                expect[OpKind::Add] = 1;
                ok = ok && shift == expect;
                before = em.trace().snapshot();
                (void)sum_row_vec(em, m);
                const OpCounts sums = em.trace().snapshot() - before;
                int lg = 0;
                while ((1 << lg) < m.padded_cols) lg++;
                ok = ok && sums[OpKind::Rot] == static_cast<std::uint64_t>(lg);
                checked++;
            }
        }
        return {ok, std::to_string(checked) + " layouts: col_shift_complete {Rot:2, cMult:2, Add:1}, "
                                               "sum_row_vec Rot = log2(padded_cols)"};
    }

    Outcome end_to_end_equivalence() {
        const Emulator em;
        double worst = 0.0;
        int runs = 0;
        const std::vector<std::array<int, 4>> shapes{{1, 128, 401, 10}, {2, 128, 401, 10}, {3, 16, 7, 3}, {4, 100, 10, 10}};
        for (const auto &s : shapes) {
            const Dataset d = synth_dataset(static_cast<std::uint64_t>(s[0]), s[1], s[2], s[3]);
            const Preconditioner pre = build_preconditioner(d.x, d.c());
            for (int k : {1, 2}) {
                EncryptedTrainingSession session =
                    client_encrypt(em, d, pre, Matrix::Zero(d.c(), d.x.cols()), reference_z3());
                const ServerResult r = server_train(em, std::move(session), k, BootstrapPolicy::Never);
                const Matrix expect = plaintext_reference(d, reference_z3(), k);
                worst = std::max(worst, (unpack(em, r.session.w) - expect).cwiseAbs().maxCoeff());
                runs++;
            }
        }
        return {worst <= 1e-6, std::to_string(runs) + " runs (k = 1, 2), max |dW| " + fmt(worst) + " (tol 1e-6)"};
    }

    Outcome budget_reproduction() {
        const Emulator em(HeParams{16, 990, 45, 128});
        const Dataset d = synth_dataset(7, 128, 401, 10);
        const Preconditioner pre = build_preconditioner(d.x, d.c());
        auto fresh = [&] { return client_encrypt(em, d, pre, Matrix::Zero(d.c(), d.x.cols()), reference_z3()); };
        const ServerResult two = server_train(em, fresh(), 2, BootstrapPolicy::Never);
        const bool two_ok = two.report.iterations == 2 && two.report.counts[OpKind::Bootstrap] == 0;
        bool three_raises = false;
        try {
            (void)server_train(em, fresh(), 3, BootstrapPolicy::Never);
        } catch (const Error &e) {
            three_raises = e.kind() == ErrorKind::LevelExhausted;
        }
        return {two_ok && three_raises, std::string("k=2: ") + (two_ok ? "completed, 0 bootstraps" : "failed") +
                                            "; k=3 never: " + (three_raises ? "LevelExhausted" : "no error") +
                                            "; max_level 22, depth/iteration " +
                                            std::to_string(two.report.depth_per_iteration)};
    }

    Outcome gradient_hessian_properties() {
        const auto fd = oracle::finite_difference_gradient(1, 100);
        const auto loewner = oracle::loewner_min_eigenvalue(2, 100);
        const auto avg = oracle::averaging_identity(3, 100);
        const bool ok = fd.instances >= 100 && loewner.instances >= 100 && avg.instances >= 100 && fd.value <= 1e-6 &&
                        loewner.value >= -1e-10 && avg.value <= 1e-15;
        return {ok, "FD rel err " + fmt(fd.value) + " (tol 1e-6), min eig " + fmt(loewner.value) +
                        " (>= -1e-10), averaging rel gap " + fmt(avg.value) + " (tol 1e-15), 100 instances each"};
    }

    Outcome convergence_ordering() {
        const Dataset d = synth_dataset(1, 100, 10, 10);
        TrainOptions opt;
        opt.iterations = 100;
        const Activation act = Activation::polynomial(reference_z3());
        const TrainResult qg = train(d, Optimizer::SigmoidNAGQG, act, opt);
        const TrainResult plain = train(d, Optimizer::SigmoidNAG, act, opt);
        bool ordered = true;
        for (size_t k = 10; k <= 100; k += 10) {
            ordered = ordered && qg.metrics[k].precision_train >= plain.metrics[k].precision_train;
        }
        const double pq = qg.metrics[100].precision_train, pp = plain.metrics[100].precision_train;
        return {ordered && pq >= 0.9 && pp >= 0.9, std::string("QG >= NAG at every 10th iteration: ") +
                                                      (ordered ? "yes" : "no") + "; final QG " + fmt(pq) + ", NAG " +
                                                      fmt(pp) + " (>= 0.9)"};
    }

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"acceptance criteria runner"};
    std::vector<std::string> only;
    app.add_option("--criterion", only, "run only the named criteria");
    app.add_option("--cli", cli_path, "path to the hemlr executable")->required();
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria{
        {"z3-reproduction", 1.0, z3_reproduction},
        {"encoding-oracle", 60.0, encoding_oracle},
        {"op-count-contracts", 0.0, op_count_contracts},
        {"end-to-end-equivalence", 300.0, end_to_end_equivalence},
        {"budget-reproduction", 0.0, budget_reproduction},
        {"gradient-hessian-properties", 60.0, gradient_hessian_properties},
        {"convergence-ordering", 0.0, convergence_ordering},
    };

    int failures = 0;
    int ran = 0;
    for (const auto &c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) {
            continue;
        }
        ran++;
        const auto start = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        if (c.time_limit_s > 0 && secs >= c.time_limit_s) {
            o.pass = false;
            o.detail += "; over time limit " + fmt(c.time_limit_s) + " s";
        }
        std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << " [" << std::fixed
                  << std::setprecision(2) << secs << " s]" << std::defaultfloat << '\n';
        failures += o.pass ? 0 : 1;
    }
    if (ran == 0) {
        std::cerr << "no criterion matched\n";
        return 2;
    }
    return failures == 0 ? 0 : 1;
}
