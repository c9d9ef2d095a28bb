#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hemlr/data.hpp"
#include "hemlr/error.hpp"
#include "hemlr/he_emulator.hpp"
#include "hemlr/he_training.hpp"
#include "hemlr/mlr.hpp"
#include "hemlr/serialization.hpp"
#include "hemlr/sigmoid_approx.hpp"
#include "hemlr/vr_encoding.hpp"

namespace py = pybind11;
using namespace hemlr;

namespace {

    py::dict counts_dict(const OpCounts &counts) {
        py::dict d;
        for (int k = 0; k < kOpKindCount; k++) {
            d[py::str(std::string(to_string(static_cast<OpKind>(k))))] = counts.counts[static_cast<size_t>(k)];
        }
        return d;
    }

    Activation activation_from(const std::optional<PolyApprox> &poly, bool clamp) {
        return poly ? Activation::polynomial(*poly, clamp) : Activation::exact();
    }

}  // namespace

PYBIND11_MODULE(_hemlr, m) {
    m.doc() = "Multiclass logistic regression over an emulated leveled HE scheme";

    static py::exception<Error> error_type(m, "HemlrError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error &e) {
            py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
            exc.attr("kind") = std::string(to_string(e.kind()));
            PyErr_SetObject(error_type.ptr(), exc.ptr());
        }
    });

    py::class_<Dataset>(m, "Dataset")
        .def_readonly("x", &Dataset::x)
        .def_readonly("labels", &Dataset::labels)
        .def_readonly("one_hot", &Dataset::one_hot)
        .def_property_readonly("n", &Dataset::n)
        .def_property_readonly("d", &Dataset::d)
        .def_property_readonly("c", &Dataset::c);

    m.def(
        "load_csv",
        [](const std::string &path, int label_column, bool bias, std::optional<int> num_classes) {
            return load_csv(path, CsvOptions{label_column, bias, num_classes});
        },
        py::arg("path"), py::arg("label_column") = 0, py::arg("bias") = true, py::arg("num_classes") = py::none());
    m.def("write_csv", [](const std::string &path, const Dataset &d) { write_csv(path, d); });
    m.def("make_dataset", &make_dataset, py::arg("features"), py::arg("labels"), py::arg("num_classes"),
          py::arg("bias") = true);
    m.def("synth_dataset", &synth_dataset, py::arg("seed"), py::arg("n"), py::arg("d"), py::arg("c"));

    py::class_<PolyApprox>(m, "PolyApprox")
        .def(py::init([](std::vector<double> coeffs, double lo, double hi) {
                 return PolyApprox(std::move(coeffs), {lo, hi});
             }),
             py::arg("coeffs"), py::arg("lo") = -8.0, py::arg("hi") = 8.0)
        .def_property_readonly("coeffs", &PolyApprox::coeffs)
        .def_property_readonly("domain", [](const PolyApprox &p) { return py::make_tuple(p.domain().lo, p.domain().hi); })
        .def_property_readonly("degree", &PolyApprox::degree)
        .def("__call__", py::overload_cast<double, bool>(&PolyApprox::operator(), py::const_), py::arg("x"),
             py::arg("clamp") = false);

    m.def("reference_z3", &reference_z3);
    m.def("fit_ls_sigmoid", [](int degree, double lo, double hi) { return fit_ls(logistic, degree, {lo, hi}); },
          py::arg("degree") = 11, py::arg("lo") = -8.0, py::arg("hi") = 8.0);
    m.def(
        "fit_sigmoid_surrogate",
        [](int degree, double lambda0, double lambda1, double lo, double hi) {
            return fit_sigmoid_surrogate(degree, {lambda0, lambda1}, {lo, hi});
        },
        py::arg("degree") = 3, py::arg("lambda0") = 128.0, py::arg("lambda1") = 1.0, py::arg("lo") = -8.0,
        py::arg("hi") = 8.0);

    m.def(
        "loss", [](const Matrix &w, const Dataset &d, const std::string &kind) { return loss(w, d, parse_loss_kind(kind)); },
        py::arg("w"), py::arg("data"), py::arg("kind") = "sle");
    m.def(
        "sle_gradient",
        [](const Matrix &w, const Dataset &d, std::optional<PolyApprox> poly, bool clamp) {
            return sle_gradient(w, d, activation_from(poly, clamp));
        },
        py::arg("w"), py::arg("data"), py::arg("poly") = py::none(), py::arg("clamp") = true);
    m.def(
        "build_preconditioner",
        [](const Matrix &x, int c, double eps) { return build_preconditioner(x, c, eps).b; }, py::arg("x"),
        py::arg("num_classes"), py::arg("eps") = 1e-10);
    m.def("precision", &precision, py::arg("w"), py::arg("data"));
    m.def(
        "train",
        [](const Dataset &d, const std::string &optimizer, int iterations, std::optional<PolyApprox> poly, bool clamp,
           double eps, const Dataset *test) {
            TrainOptions opt;
            opt.iterations = iterations;
            opt.eps = eps;
            const TrainResult r = train(d, parse_optimizer(optimizer), activation_from(poly, clamp), opt, test);
            py::list metrics;
            for (const auto &it : r.metrics) {
                py::dict row;
                row["iter"] = it.iter;
                row["precision_train"] = it.precision_train;
                row["precision_test"] = it.precision_test;
                row["lnL2"] = it.ln_l2;
                row["lnL_softmax"] = it.ln_l_softmax;
                metrics.append(row);
            }
            return py::make_tuple(r.w, metrics);
        },
        py::arg("data"), py::arg("optimizer") = "sigmoid-nag-qg", py::arg("iterations") = 2,
        py::arg("poly") = py::none(), py::arg("clamp") = true, py::arg("eps") = 1e-10, py::arg("test") = nullptr);

    py::class_<HeParams>(m, "HeParams")
        .def(py::init([](int log_n, int log_q, int log_p) { return HeParams{log_n, log_q, log_p, 128}; }),
             py::arg("log_n") = 16, py::arg("log_q") = 990, py::arg("log_p") = 45)
        .def_readwrite("log_n", &HeParams::log_n)
        .def_readwrite("log_q", &HeParams::log_q)
        .def_readwrite("log_p", &HeParams::log_p)
        .def_property_readonly("slots", &HeParams::slots)
        .def_property_readonly("max_level", &HeParams::max_level);

    py::class_<CiphertextSim>(m, "Ciphertext")
        .def_property_readonly("level", &CiphertextSim::level)
        .def_property_readonly("scale_bits", &CiphertextSim::scale_bits);

    py::class_<Emulator>(m, "Emulator")
        .def(py::init<HeParams>(), py::arg("params") = HeParams::default_preset())
        .def_property_readonly("slots", &Emulator::slots)
        .def("enc", [](const Emulator &em, const std::vector<double> &v) { return em.enc(v); })
        .def("dec", &Emulator::dec)
        .def("add", &Emulator::add)
        .def("sub", &Emulator::sub)
        .def("mult", &Emulator::mult)
        .def("cmult", [](const Emulator &em, const std::vector<double> &k, const CiphertextSim &a) { return em.cmult(k, a); })
        .def("rescale", &Emulator::rescale)
        .def("rot", &Emulator::rot)
        .def("bootstrap", &Emulator::bootstrap)
        .def("level_align", &Emulator::level_align)
        .def("op_counts", [](const Emulator &em) { return counts_dict(em.trace().snapshot()); });

    py::class_<PackedMatrix>(m, "PackedMatrix")
        .def_readonly("rows", &PackedMatrix::rows)
        .def_readonly("cols", &PackedMatrix::cols)
        .def_readonly("padded_cols", &PackedMatrix::padded_cols)
        .def_readonly("rows_per_ct", &PackedMatrix::rows_per_ct)
        .def_readonly("transposed", &PackedMatrix::transposed)
        .def_property_readonly("ciphertext_count", [](const PackedMatrix &p) { return p.cts.size(); })
        .def_property_readonly("level", &PackedMatrix::level);

    m.def("pack", &pack, py::arg("em"), py::arg("m"), py::arg("transpose") = false, py::arg("width") = 0);
    m.def("unpack", &unpack);
    m.def("dvr_matmul", &dvr_matmul);
    m.def("col_shift_complete", &col_shift_complete);
    m.def("sum_row_vec", &sum_row_vec);

    py::class_<EncryptedTrainingSession>(m, "EncryptedTrainingSession")
        .def_readonly("iteration", &EncryptedTrainingSession::iteration)
        .def("upload_count", &EncryptedTrainingSession::upload_count)
        .def_property_readonly("weights", [](const EncryptedTrainingSession &s) { return s.w; });

    m.def(
        "client_encrypt",
        [](const Emulator &em, const Dataset &d, double eps, std::optional<PolyApprox> poly) {
            const Preconditioner pre = build_preconditioner(d.x, d.c(), eps);
            return client_encrypt(em, d, pre, Matrix::Zero(d.c(), d.x.cols()), poly ? *poly : reference_z3());
        },
        py::arg("em"), py::arg("data"), py::arg("eps") = 1e-10, py::arg("poly") = py::none());
    m.def(
        "server_train",
        [](const Emulator &em, EncryptedTrainingSession s, int iterations, const std::string &policy) {
            ServerResult r = server_train(em, std::move(s), iterations, parse_bootstrap_policy(policy));
            return py::make_tuple(std::move(r.session), py::module_::import("json").attr("loads")(trace_to_json(r.report).dump()));
        },
        py::arg("em"), py::arg("session"), py::arg("iterations") = 2, py::arg("policy") = "never");
    m.def("client_decrypt_eval", [](const Emulator &em, const EncryptedTrainingSession &s, const Dataset &test) {
        const EvalReport r = client_decrypt_eval(em, s, test);
        py::dict d;
        d["w"] = r.w;
        d["precision"] = r.precision;
        d["lnL2"] = r.ln_l2;
        d["lnL_softmax"] = r.ln_l_softmax;
        return d;
    });
    m.def("plaintext_reference", &plaintext_reference, py::arg("data"), py::arg("poly"), py::arg("iterations"),
          py::arg("eps") = 1e-10);
}
