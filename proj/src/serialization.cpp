#include "hemlr/serialization.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hemlr/error.hpp"

namespace hemlr {

    namespace fs = std::filesystem;

    Json model_to_json(const Matrix &w) {
        Json rows = Json::array();
        for (Eigen::Index r = 0; r < w.rows(); r++) {
            Json row = Json::array();
            for (Eigen::Index c = 0; c < w.cols(); c++) {
                row.push_back(w(r, c));
            }
            rows.push_back(std::move(row));
        }
        return {{"c", w.rows()}, {"d", w.cols() - 1}, {"W", std::move(rows)}};
    }

    Matrix model_from_json(const Json &j) {
        try {
            const int c = j.at("c").get<int>();
            const int d = j.at("d").get<int>();
            const Json &rows = j.at("W");
            if (c < 1 || d < 0 || static_cast<int>(rows.size()) != c) {
                throw Error(ErrorKind::DimensionMismatch, "model JSON: W does not have c rows");
            }
            Matrix w(c, d + 1);
            for (int r = 0; r < c; r++) {
                if (static_cast<int>(rows[static_cast<size_t>(r)].size()) != d + 1) {
                    throw Error(ErrorKind::DimensionMismatch, "model JSON: row " + std::to_string(r) +
                                                                  " does not have d + 1 entries");
                }
                for (int k = 0; k <= d; k++) {
                    w(r, k) = rows[static_cast<size_t>(r)][static_cast<size_t>(k)].get<double>();
                }
            }
            return w;
        } catch (const Json::exception &e) {
            throw Error(ErrorKind::MalformedRow, std::string("model JSON: ") + e.what());
        }
    }

    Json poly_to_json(const PolyApprox &p) {
        return {{"domain", {p.domain().lo, p.domain().hi}}, {"coeffs", p.coeffs()}};
    }

    PolyApprox poly_from_json(const Json &j) {
        try {
            const auto dom = j.at("domain").get<std::vector<double>>();
            if (dom.size() != 2) {
                throw Error(ErrorKind::InvalidArgument, "polynomial JSON: domain needs two entries");
            }
            return PolyApprox(j.at("coeffs").get<std::vector<double>>(), {dom[0], dom[1]});
        } catch (const Json::exception &e) {
            throw Error(ErrorKind::MalformedRow, std::string("polynomial JSON: ") + e.what());
        }
    }

    namespace {

        Json counts_to_json(const OpCounts &counts) {
            Json j = Json::object();
            for (int k = 0; k < kOpKindCount; k++) {
                j[std::string(to_string(static_cast<OpKind>(k)))] = counts.counts[static_cast<size_t>(k)];
            }
            return j;
        }

        OpCounts counts_from_json(const Json &j) {
            OpCounts counts;
            for (int k = 0; k < kOpKindCount; k++) {
                const std::string key(to_string(static_cast<OpKind>(k)));
                if (j.contains(key)) {
                    counts.counts[static_cast<size_t>(k)] = j.at(key).get<std::uint64_t>();
                }
            }
            return counts;
        }

        Json team_to_json(const fs::path &dir, const std::string &name, const PackedMatrix &p) {
            Json files = Json::array();
            for (size_t i = 0; i < p.cts.size(); i++) {
                const std::string file = name + "_" + std::to_string(i) + ".json";
                const auto slots = p.cts[i].slots();
                write_json(dir / file, {{"level", p.cts[i].level()},
                                        {"scale_bits", p.cts[i].scale_bits()},
                                        {"slots", std::vector<double>(slots.begin(), slots.end())}});
                files.push_back(file);
            }
            return {{"rows", p.rows},
                    {"cols", p.cols},
                    {"padded_cols", p.padded_cols},
                    {"rows_per_ct", p.rows_per_ct},
                    {"transposed", p.transposed},
                    {"cts", std::move(files)}};
        }

        PackedMatrix team_from_json(const fs::path &dir, const Json &j, const Emulator &em) {
            PackedMatrix p;
            p.rows = j.at("rows").get<int>();
            p.cols = j.at("cols").get<int>();
            p.padded_cols = j.at("padded_cols").get<int>();
            p.rows_per_ct = j.at("rows_per_ct").get<int>();
            p.transposed = j.at("transposed").get<bool>();
            if (p.padded_cols * p.rows_per_ct != em.slots()) {
                throw Error(ErrorKind::DimensionMismatch, "checkpoint geometry does not match the slot count");
            }
            for (const auto &file : j.at("cts")) {
                const Json ct = read_json(dir / file.get<std::string>());
                p.cts.push_back(em.restore(ct.at("slots").get<std::vector<double>>(), ct.at("level").get<int>(),
                                           ct.at("scale_bits").get<int>()));
            }
            return p;
        }

        Json params_to_json(const HeParams &params) {
            return {{"log_n", params.log_n},
                    {"log_q", params.log_q},
                    {"log_p", params.log_p},
                    {"security_bits", params.security_bits}};
        }

        std::string cell(double v) {
            if (std::isnan(v)) {
                return "nan";
            }
            std::ostringstream out;
            out << std::setprecision(17) << v;
            return out.str();
        }

    }  // namespace

    Json trace_to_json(const TraceReport &report) {
        return {{"iterations", report.iterations},
                {"per_op_counts", counts_to_json(report.counts)},
                {"total_ops", report.counts.total()},
                {"depth_per_iteration", report.depth_per_iteration},
                {"weight_levels", report.weight_levels},
                {"max_depth", report.max_depth},
                {"peak_payload_count", report.peak_payload_count}};
    }

    std::string metrics_csv(const std::vector<IterationMetrics> &metrics) {
        std::ostringstream out;
        out << "iter,precision_train,precision_test,lnL2,lnL_softmax\n";
        for (const auto &m : metrics) {
            out << m.iter << ',' << cell(m.precision_train) << ',' << cell(m.precision_test) << ','
                << cell(m.ln_l2) << ',' << cell(m.ln_l_softmax) << '\n';
        }
        return out.str();
    }

    void write_metrics_csv(const fs::path &path, const std::vector<IterationMetrics> &metrics) {
        std::ofstream out(path);
        if (!out) {
            throw Error(ErrorKind::FileNotFound, "cannot write " + path.string());
        }
        out << metrics_csv(metrics);
    }

    Json read_json(const fs::path &path) {
        std::ifstream in(path);
        if (!in) {
            throw Error(ErrorKind::FileNotFound, "cannot open " + path.string());
        }
        try {
            return Json::parse(in);
        } catch (const Json::exception &e) {
            throw Error(ErrorKind::MalformedRow, path.string() + ": " + e.what());
        }
    }

    void write_json(const fs::path &path, const Json &j) {
        std::ofstream out(path);
        if (!out) {
            throw Error(ErrorKind::FileNotFound, "cannot write " + path.string());
        }
        out << j.dump(2) << '\n';
    }

    void save_checkpoint(const fs::path &dir, const Emulator &em, const EncryptedTrainingSession &s) {
        fs::create_directories(dir);
        Json teams = {{"x", team_to_json(dir, "x", s.x)},
                      {"y", team_to_json(dir, "y", s.y)},
                      {"b", team_to_json(dir, "b", s.b)},
                      {"w", team_to_json(dir, "w", s.w)}};
        if (s.v) {
            teams["v"] = team_to_json(dir, "v", *s.v);
        }
        write_json(dir / "session.json", {{"params", params_to_json(em.params())},
                                          {"n", s.n},
                                          {"c", s.num_classes},
                                          {"iteration", s.iteration},
                                          {"alpha0", s.alpha0},
                                          {"alpha1", s.alpha1},
                                          {"activation", poly_to_json(s.activation)},
                                          {"teams", std::move(teams)},
                                          {"trace", counts_to_json(em.trace().snapshot())}});
    }

    HeParams checkpoint_params(const fs::path &dir) {
        const Json j = read_json(dir / "session.json");
        try {
            const Json &p = j.at("params");
            HeParams params;
            params.log_n = p.at("log_n").get<int>();
            params.log_q = p.at("log_q").get<int>();
            params.log_p = p.at("log_p").get<int>();
            params.security_bits = p.value("security_bits", 128);
            return params;
        } catch (const Json::exception &e) {
            throw Error(ErrorKind::MalformedRow, std::string("checkpoint: ") + e.what());
        }
    }

    LoadedCheckpoint load_checkpoint(const fs::path &dir, const Emulator &em) {
        const Json j = read_json(dir / "session.json");
        LoadedCheckpoint out;
        out.params = checkpoint_params(dir);
        const HeParams &have = em.params();
        if (out.params.log_n != have.log_n || out.params.log_q != have.log_q || out.params.log_p != have.log_p) {
            throw Error(ErrorKind::InvalidArgument, "checkpoint parameters differ from the emulator's");
        }
        try {
            auto &s = out.session;
            s.n = j.at("n").get<int>();
            s.num_classes = j.at("c").get<int>();
            s.iteration = j.at("iteration").get<int>();
            s.alpha0 = j.at("alpha0").get<double>();
            s.alpha1 = j.at("alpha1").get<double>();
            s.activation = poly_from_json(j.at("activation"));
            const Json &teams = j.at("teams");
            s.x = team_from_json(dir, teams.at("x"), em);
            s.y = team_from_json(dir, teams.at("y"), em);
            s.b = team_from_json(dir, teams.at("b"), em);
            s.w = team_from_json(dir, teams.at("w"), em);
            if (teams.contains("v")) {
                s.v = team_from_json(dir, teams.at("v"), em);
            }
            out.counts_at_save = counts_from_json(j.at("trace"));
        } catch (const Json::exception &e) {
            throw Error(ErrorKind::MalformedRow, std::string("checkpoint: ") + e.what());
        }
        return out;
    }

}  // namespace hemlr
