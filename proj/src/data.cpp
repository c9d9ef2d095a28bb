#include "hemlr/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "hemlr/error.hpp"

namespace hemlr {

    namespace {

        std::vector<std::string_view> split_fields(std::string_view line) {
            std::vector<std::string_view> fields;
            size_t start = 0;
            while (true) {
                size_t comma = line.find(',', start);
                if (comma == std::string_view::npos) {
                    fields.push_back(line.substr(start));
                    break;
                }
                fields.push_back(line.substr(start, comma - start));
                start = comma + 1;
            }
            for (auto &f : fields) {
                while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) {
                    f.remove_prefix(1);
                }
                while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) {
                    f.remove_suffix(1);
                }
            }
            return fields;
        }

        double parse_double(std::string_view field, size_t line_no) {
            double value = 0;
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
            if (ec != std::errc() || ptr != field.data() + field.size()) {
                throw Error(ErrorKind::MalformedRow,
                            "line " + std::to_string(line_no) + ": cannot parse '" + std::string(field) + "'");
            }
            return value;
        }

        int parse_label(std::string_view field, size_t line_no) {
            double value = 0;
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
            if (ec != std::errc() || ptr != field.data() + field.size() || value < 0 || std::floor(value) != value ||
                value > 1e9) {
                throw Error(ErrorKind::NonIntegerLabel,
                            "line " + std::to_string(line_no) + ": label '" + std::string(field) + "'");
            }
            return static_cast<int>(value);
        }

    }  // namespace

    Matrix one_hot(std::span<const int> labels, int num_classes) {
        Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
        for (size_t i = 0; i < labels.size(); i++) {
            if (labels[i] < 0 || labels[i] >= num_classes) {
                throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(labels[i]) + " at row " +
                                                            std::to_string(i) + " with c=" + std::to_string(num_classes));
            }
            y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
        }
        return y;
    }

    Dataset make_dataset(const Matrix &features, std::vector<int> labels, int num_classes, bool bias) {
        if (features.rows() != static_cast<Eigen::Index>(labels.size())) {
            throw Error(ErrorKind::DimensionMismatch, "feature rows and label count differ");
        }
        Dataset data;
        data.has_bias = bias;
        if (bias) {
            data.x.resize(features.rows(), features.cols() + 1);
            data.x.col(0).setOnes();
            data.x.rightCols(features.cols()) = features;
        } else {
            data.x = features;
        }
        data.one_hot = one_hot(labels, num_classes);
        data.labels = std::move(labels);
        data.num_classes = num_classes;
        return data;
    }

    Dataset load_csv(const std::filesystem::path &path, const CsvOptions &options) {
        std::ifstream in(path);
        if (!in) {
            throw Error(ErrorKind::FileNotFound, path.string());
        }
        std::vector<std::vector<double>> rows;
        std::vector<int> labels;
        size_t width = 0;
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            line_no++;
            if (line.find_first_not_of(" \t\r") == std::string::npos) {
                continue;
            }
            auto fields = split_fields(line);
            if (rows.empty()) {
                width = fields.size();
                if (options.label_column < 0 || static_cast<size_t>(options.label_column) >= width) {
                    throw Error(ErrorKind::MalformedRow, "label column outside row of " + std::to_string(width));
                }
            } else if (fields.size() != width) {
                throw Error(ErrorKind::MalformedRow, "line " + std::to_string(line_no) + " has " +
                                                         std::to_string(fields.size()) + " fields, expected " +
                                                         std::to_string(width));
            }
            std::vector<double> row;
            row.reserve(width - 1);
            for (size_t j = 0; j < fields.size(); j++) {
                if (static_cast<int>(j) == options.label_column) {
                    labels.push_back(parse_label(fields[j], line_no));
                } else {
                    row.push_back(parse_double(fields[j], line_no));
                }
            }
            rows.push_back(std::move(row));
        }
        if (rows.empty()) {
            throw Error(ErrorKind::EmptyFile, path.string());
        }

        Matrix features(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
        for (size_t i = 0; i < rows.size(); i++) {
            for (size_t j = 0; j < rows[i].size(); j++) {
                features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
            }
        }
        int c = 0;
        for (int label : labels) {
            c = std::max(c, label + 1);
        }
        if (options.num_classes) {
            c = *options.num_classes;
        }
        return make_dataset(features, std::move(labels), c, options.bias);
    }

    void write_csv(const std::filesystem::path &path, const Dataset &data) {
        std::ofstream out(path);
        if (!out) {
            throw Error(ErrorKind::FileNotFound, "cannot open " + path.string() + " for writing");
        }
        out.precision(17);
        const Eigen::Index first = data.has_bias ? 1 : 0;
        for (Eigen::Index i = 0; i < data.x.rows(); i++) {
            out << data.labels[static_cast<size_t>(i)];
            for (Eigen::Index j = first; j < data.x.cols(); j++) {
                out << ',' << data.x(i, j);
            }
            out << '\n';
        }
    }

    Dataset synth_dataset(std::uint64_t seed, int n, int d, int c) {
        if (c < 2 || n < c || d < 1) {
            throw Error(ErrorKind::InvalidArgument, "synth_dataset needs n >= c >= 2 and d >= 1");
        }
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> centre_dist(0.0, 2.0);
        std::normal_distribution<double> noise(0.0, 1.0);
        std::uniform_int_distribution<int> pick(0, c - 1);

        Matrix centres(c, d);
        for (int k = 0; k < c; k++) {
            for (int j = 0; j < d; j++) {
                centres(k, j) = centre_dist(rng);
            }
        }
        std::vector<int> labels(static_cast<size_t>(n));
        for (int i = 0; i < n; i++) {
            labels[static_cast<size_t>(i)] = i < c ? i : pick(rng);
        }
        Matrix features(n, d);
        for (int i = 0; i < n; i++) {
            for (int j = 0; j < d; j++) {
                features(i, j) = centres(labels[static_cast<size_t>(i)], j) + noise(rng);
            }
        }
        return make_dataset(features, std::move(labels), c, true);
    }

    FeatureRange fit_minmax(const Dataset &data) {
        const Eigen::Index first = data.has_bias ? 1 : 0;
        auto block = data.x.rightCols(data.x.cols() - first);
        return {block.colwise().minCoeff().transpose(), block.colwise().maxCoeff().transpose()};
    }

    void apply_minmax(Dataset &data, const FeatureRange &range) {
        const Eigen::Index first = data.has_bias ? 1 : 0;
        if (range.lo.size() != data.x.cols() - first) {
            throw Error(ErrorKind::DimensionMismatch, "feature range width differs from dataset");
        }
        for (Eigen::Index j = 0; j < range.lo.size(); j++) {
            const double span = range.hi(j) - range.lo(j);
            auto col = data.x.col(j + first);
            if (span > 0) {
                col = (col.array() - range.lo(j)) / span;
            } else {
                col.setZero();
            }
        }
    }

}  // namespace hemlr
