#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ctaes/corpus.hpp"
#include "ctaes/feats.hpp"
#include "ctaes/metrics.hpp"
#include "ctaes/pseudo.hpp"

namespace py = pybind11;
using namespace ctaes;

namespace {

Mat row_from(const std::vector<double>& v) { return Mat::row(v); }

pseudo::MemoryBank make_bank(const std::vector<std::string>& ids,
                             const std::vector<std::vector<double>>& features,
                             const std::vector<std::vector<double>>& probs, double lam, double tau) {
    std::vector<Mat> f, p;
    for (const auto& x : features) f.push_back(row_from(x));
    for (const auto& x : probs) p.push_back(row_from(x));
    return pseudo::MemoryBank::init(ids, f, p, lam, tau);
}

} // namespace

PYBIND11_MODULE(_ctaes, m) {
    m.doc() = "cross-topic essay scoring core operations";

    m.def(
        "normalize_score",
        [](int raw, int min_raw, int max_raw) {
            return corpus::normalize_score(raw, {min_raw, max_raw});
        },
        py::arg("raw"), py::arg("min_raw"), py::arg("max_raw"),
        "Map a raw score onto [0, 1] within its declared range.");
    m.def(
        "denormalize_score",
        [](double unit, int min_raw, int max_raw) {
            return corpus::denormalize_score(unit, {min_raw, max_raw});
        },
        py::arg("unit"), py::arg("min_raw"), py::arg("max_raw"),
        "Round a unit score back to an integer raw score (half away from zero, clamped).");
    m.def("score_to_class", &corpus::score_to_class, py::arg("unit"),
          "Grade class for a unit score: 0 poor, 1 moderate, 2 good, 3 excellent.");
    m.def("qwk", &metrics::qwk, py::arg("pred"), py::arg("gold"), py::arg("min_rating"),
          py::arg("max_rating"), "Quadratic weighted kappa over integer ratings.");
    m.def("sharpen", &pseudo::sharpen, py::arg("p"), py::arg("tau"),
          "Temperature-sharpen a probability vector.");
    m.def(
        "extract_features",
        [](const std::vector<std::string>& tokens) {
            feats::Extractor ex(feats::Lexicon::builtin());
            Mat f = ex.extract(tokens);
            return std::vector<double>(f.a.begin(), f.a.end());
        },
        py::arg("tokens"), "86-dimensional handcrafted feature vector for a token sequence.");
    m.def("feature_schema_json", &feats::feature_schema_json,
          "Machine-readable feature manifest (name, group, index).");
    m.attr("FEATURE_DIM") = feats::kFeatureDim;
    m.attr("NUM_TRAITS") = corpus::kNumTraits;
    m.attr("NUM_GRADES") = corpus::kNumGrades;

    py::class_<pseudo::MemoryBank>(m, "MemoryBank",
                                   "Per-essay EMA feature/soft-label store with kNN pseudo-labeling")
        .def(py::init(&make_bank), py::arg("essay_ids"), py::arg("features"), py::arg("class_probs"),
             py::arg("lam"), py::arg("tau"))
        .def(
            "update",
            [](pseudo::MemoryBank& b, const std::string& id, const std::vector<double>& f,
               const std::vector<double>& p) { b.update(id, row_from(f), row_from(p)); },
            py::arg("essay_id"), py::arg("feature"), py::arg("class_probs"))
        .def(
            "knn_pseudo_label",
            [](const pseudo::MemoryBank& b, const std::vector<double>& h, const std::string& query_id,
               int k) {
                auto pl = b.knn_pseudo_label(row_from(h), query_id, k);
                return py::make_tuple(pl.grade, pl.soft, pl.neighbor_ids);
            },
            py::arg("h"), py::arg("query_id"), py::arg("k"))
        .def_property_readonly("size", &pseudo::MemoryBank::size);

#ifdef CTAES_VERSION
    m.attr("__version__") = CTAES_VERSION;
#else
    m.attr("__version__") = "0.1.0";
#endif
}
