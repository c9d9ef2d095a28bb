#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include <gtest/gtest.h>

#include "hemlr/data.hpp"
#include "hemlr/error.hpp"
#include "hemlr/linalg.hpp"

namespace hemlr::testing {

    class Rng {
    public:
        explicit Rng(std::uint64_t seed) : gen_(seed) {}

        double uniform(double lo = -1.0, double hi = 1.0) {
            return std::uniform_real_distribution<double>(lo, hi)(gen_);
        }

        int integer(int lo, int hi) {
            return std::uniform_int_distribution<int>(lo, hi)(gen_);
        }

        Matrix matrix(int rows, int cols, double lo = -1.0, double hi = 1.0) {
            Matrix m(rows, cols);
            for (int r = 0; r < rows; r++) {
                for (int c = 0; c < cols; c++) {
                    m(r, c) = uniform(lo, hi);
                }
            }
            return m;
        }

        // Random features with bias and labels covering every class.
        Dataset dataset(int n, int d, int c, double scale = 1.0) {
            std::vector<int> labels(static_cast<size_t>(n));
            for (int i = 0; i < n; i++) {
                labels[static_cast<size_t>(i)] = i < c ? i : integer(0, c - 1);
            }
            return make_dataset(matrix(n, d, -scale, scale), std::move(labels), c);
        }

        std::mt19937_64 &engine() {
            return gen_;
        }

    private:
        std::mt19937_64 gen_;
    };

    inline double max_abs_diff(const Matrix &a, const Matrix &b) {
        return (a - b).cwiseAbs().maxCoeff();
    }

    // Fresh directory under the system temp dir, removed on destruction.
    class TempDir {
    public:
        explicit TempDir(const std::string &tag) {
            static int counter = 0;
            path_ = std::filesystem::temp_directory_path() /
                    ("hemlr_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
            std::filesystem::remove_all(path_);
            std::filesystem::create_directories(path_);
        }
        ~TempDir() {
            std::error_code ec;
            std::filesystem::remove_all(path_, ec);
        }
        const std::filesystem::path &path() const {
            return path_;
        }

    private:
        std::filesystem::path path_;
    };

}  // namespace hemlr::testing

#define EXPECT_HEMLR_ERROR(stmt, expected_kind)                                              \
    do {                                                                                     \
        try {                                                                                \
            stmt;                                                                            \
            ADD_FAILURE() << "expected " << ::hemlr::to_string(expected_kind) << " from " #stmt; \
        } catch (const ::hemlr::Error &e_) {                                                 \
            EXPECT_EQ(e_.kind(), expected_kind) << e_.what();                                \
        }                                                                                    \
    } while (0)
