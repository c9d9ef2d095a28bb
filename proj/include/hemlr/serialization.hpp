#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "hemlr/he_training.hpp"
#include "hemlr/linalg.hpp"
#include "hemlr/mlr.hpp"
#include "hemlr/sigmoid_approx.hpp"

namespace hemlr {

    using Json = nlohmann::json;

    // {"c": c, "d": d, "W": [[...], ...]} with W row-major, c x (1+d).
    Json model_to_json(const Matrix &w);
    Matrix model_from_json(const Json &j);

    // {"domain": [lo, hi], "coeffs": [a0, a1, ...]}
    Json poly_to_json(const PolyApprox &p);
    PolyApprox poly_from_json(const Json &j);

    Json trace_to_json(const TraceReport &report);

    // Header iter,precision_train,precision_test,lnL2,lnL_softmax; NaN cells are written as "nan".
    void write_metrics_csv(const std::filesystem::path &path, const std::vector<IterationMetrics> &metrics);
    std::string metrics_csv(const std::vector<IterationMetrics> &metrics);

    Json read_json(const std::filesystem::path &path);
    void write_json(const std::filesystem::path &path, const Json &j);

    /* Session checkpoint: a directory with session.json (scalars, team geometry, activation, emulator
     * parameters and the trace counters at save time) and one JSON file per ciphertext.
     */
    void save_checkpoint(const std::filesystem::path &dir, const Emulator &em, const EncryptedTrainingSession &s);

    struct LoadedCheckpoint {
        HeParams params;
        EncryptedTrainingSession session;
        OpCounts counts_at_save;
    };

    // Ciphertexts are rebuilt through `em`, whose parameters must match the saved ones.
    LoadedCheckpoint load_checkpoint(const std::filesystem::path &dir, const Emulator &em);
    HeParams checkpoint_params(const std::filesystem::path &dir);

}  // namespace hemlr
