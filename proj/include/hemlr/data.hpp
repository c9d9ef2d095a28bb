#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "hemlr/linalg.hpp"

namespace hemlr {

    /* A labelled training or testing set.
     *
     * x is n x (1+d) when the bias column is present (x(i, 0) == 1), otherwise n x d.
     * one_hot is n x c with one_hot(i, labels[i]) == 1 and zeros elsewhere.
     */
    struct Dataset {
        Matrix x;
        std::vector<int> labels;
        Matrix one_hot;
        int num_classes = 0;
        bool has_bias = true;

        int n() const {
            return static_cast<int>(x.rows());
        }
        // Number of features, excluding the bias column.
        int d() const {
            return static_cast<int>(x.cols()) - (has_bias ? 1 : 0);
        }
        int c() const {
            return num_classes;
        }
    };

    struct CsvOptions {
        int label_column = 0;
        bool bias = true;
        // Overrides c = max(label) + 1, e.g. so a test split shares the training class count.
        std::optional<int> num_classes;
    };

    Dataset load_csv(const std::filesystem::path &path, const CsvOptions &options = {});

    // Writes label first, then the features (bias column dropped), no header.
    void write_csv(const std::filesystem::path &path, const Dataset &data);

    Matrix one_hot(std::span<const int> labels, int num_classes);

    Dataset make_dataset(const Matrix &features, std::vector<int> labels, int num_classes, bool bias = true);

    // Gaussian clusters around c random centres. Labels 0..c-1 are assigned to the first c rows so every
    // class is present; the remaining rows draw uniformly.
    Dataset synth_dataset(std::uint64_t seed, int n, int d, int c);

    struct FeatureRange {
        Vector lo;
        Vector hi;
    };

    FeatureRange fit_minmax(const Dataset &data);
    // Maps every non-bias feature to [0, 1] using the given per-column range; constant columns map to 0.
    void apply_minmax(Dataset &data, const FeatureRange &range);

}  // namespace hemlr
