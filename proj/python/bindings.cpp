#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "msd/classifiers.hpp"
#include "msd/dataset.hpp"
#include "msd/evaluation.hpp"
#include "msd/features.hpp"
#include "msd/version.hpp"

namespace py = pybind11;
using namespace msd;

namespace {

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw Error(ErrorKind::Usage, "expected a 1-D array");
  return std::vector<double>(a.data(), a.data() + a.shape(0));
}

features::FeatureMatrix make_matrix(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
    const std::vector<std::string>& labels, const std::vector<std::string>& ids) {
  if (x.ndim() != 2) throw Error(ErrorKind::Usage, "X must be a 2-D array");
  const std::size_t rows = static_cast<std::size_t>(x.shape(0));
  const std::size_t cols = static_cast<std::size_t>(x.shape(1));
  if (labels.size() != rows) throw Error(ErrorKind::Usage, "labels must match rows of X");
  features::FeatureMatrix m;
  if (cols == features::kFeatureCount) {
    m.feature_names = features::feature_names();
  } else {
    for (std::size_t c = 0; c < cols; ++c) m.feature_names.push_back("f" + std::to_string(c));
  }
  for (std::size_t r = 0; r < rows; ++r) {
    m.ids.push_back(ids.empty() ? "row_" + std::to_string(r) : ids[r]);
    m.labels.push_back(parse_class_label(labels[r]));
  }
  m.values.assign(x.data(), x.data() + rows * cols);
  return m;
}

Waveform make_waveform(const py::array_t<double, py::array::c_style | py::array::forcecast>& samples,
                       double sample_rate) {
  Waveform w;
  w.samples = to_vector(samples);
  w.sample_rate = sample_rate;
  return w;
}

evaluation::GridSpec make_grid(const std::vector<double>& c_values,
                               const std::vector<double>& gamma_values,
                               const std::vector<int>& nf_values) {
  evaluation::GridSpec grid = evaluation::GridSpec::log_range();
  if (!c_values.empty()) grid.c_values = c_values;
  if (!gamma_values.empty()) grid.gamma_values = gamma_values;
  if (!nf_values.empty()) grid.nf_values = nf_values;
  return grid;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Acoustic feature extraction and hierarchical SVM classification of "
            "dysarthria, apraxia of speech, and neurotypical speech";
  m.attr("__version__") = kToolVersion;

  py::register_exception<Error>(m, "MsdError");

  m.def("feature_names", [] { return features::feature_names(); },
        "Names of the 28 features in order");

  m.def(
      "fit_chi_shape",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> samples) {
        return dsp::fit_chi_shape(to_vector(samples));
      },
      py::arg("samples"),
      "Maximum-likelihood Chi shape parameter with the scale profiled out");

  m.def(
      "descriptive_stats",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x) {
        const auto q = dsp::descriptive_stats(to_vector(x));
        return py::make_tuple(q.mean, q.std, q.kurtosis, q.skewness);
      },
      py::arg("x"), "Population (mean, std, excess kurtosis, skewness)");

  m.def(
      "stft_magnitudes",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> samples,
         double sample_rate, double window_ms, double hop_ms, int nfft) {
        dsp::StftConfig cfg;
        cfg.window_ms = window_ms;
        cfg.hop_ms = hop_ms;
        cfg.nfft = nfft;
        const auto s = dsp::stft(make_waveform(samples, sample_rate), cfg);
        py::array_t<double> out({s.frames, s.bins});
        std::copy(s.magnitudes.begin(), s.magnitudes.end(), out.mutable_data());
        return out;
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("window_ms") = 32.0,
      py::arg("hop_ms") = 10.0, py::arg("nfft") = 512);

  m.def(
      "extract_features",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> samples,
         double sample_rate) {
        const auto v = features::extract_features(make_waveform(samples, sample_rate));
        py::array_t<double> out(static_cast<py::ssize_t>(features::kFeatureCount));
        std::copy(v.values.begin(), v.values.end(), out.mutable_data());
        return out;
      },
      py::arg("samples"), py::arg("sample_rate"),
      "28-dim handcrafted feature vector of a preprocessed waveform");

  m.def(
      "extract_features_wav",
      [](const std::string& path) {
        dataset::ManifestEntry e;
        e.recording_id = path;
        e.audio_paths = {path};
        const auto v = features::extract_features(dataset::preprocess(e));
        py::array_t<double> out(static_cast<py::ssize_t>(features::kFeatureCount));
        std::copy(v.values.begin(), v.values.end(), out.mutable_data());
        return out;
      },
      py::arg("path"), "Decode, resample to 16 kHz, and extract the 28-dim feature vector");

  m.def(
      "anova_f",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> values,
         const std::vector<bool>& groups) {
        std::vector<std::uint8_t> g(groups.begin(), groups.end());
        return selection::anova_f(to_vector(values), g);
      },
      py::arg("values"), py::arg("groups"), "One-way ANOVA F-value for a binary grouping");

  m.def(
      "select_top",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x,
         const std::vector<bool>& groups, std::size_t n_f) {
        std::vector<std::string> labels(static_cast<std::size_t>(x.shape(0)), "neurotypical");
        const auto m2 = make_matrix(x, labels, {});
        std::vector<std::size_t> rows(m2.rows());
        std::iota(rows.begin(), rows.end(), 0);
        std::vector<std::uint8_t> g(groups.begin(), groups.end());
        const auto mask = selection::select_top(m2, rows, g, n_f);
        return py::make_tuple(mask.indices, mask.scores);
      },
      py::arg("X"), py::arg("groups"), py::arg("n_f"),
      "Top n_f feature indices by ANOVA F, plus all scores");

  m.def("stratified_folds",
        [](const std::vector<std::string>& labels, int k, std::uint64_t seed) {
          std::vector<ClassLabel> parsed;
          for (const auto& l : labels) parsed.push_back(parse_class_label(l));
          return evaluation::stratified_folds(parsed, k, seed);
        },
        py::arg("labels"), py::arg("k"), py::arg("seed"));

  m.def("balanced_accuracy", &evaluation::balanced_accuracy, py::arg("acc_neurotypical"),
        py::arg("acc_dysarthria"), py::arg("acc_aos"));

  m.def(
      "group_accuracies",
      [](const std::vector<std::string>& predictions, const std::vector<std::string>& truths) {
        std::vector<ClassLabel> p, t;
        for (const auto& s : predictions) p.push_back(parse_class_label(s));
        for (const auto& s : truths) t.push_back(parse_class_label(s));
        const auto g = evaluation::compute_group_accuracies(p, t);
        py::dict out;
        out["balanced"] = g.balanced;
        out["neurotypical"] = g.neurotypical;
        out["patient"] = g.patient;
        out["dysarthria"] = g.dysarthria;
        out["aos"] = g.aos;
        return out;
      },
      py::arg("predictions"), py::arg("truths"));

  m.def(
      "synth_cohort",
      [](std::uint64_t seed, int n_neuro, int n_dys, int n_aos, double separation) {
        const auto mat = evaluation::synth_cohort(seed, n_neuro, n_dys, n_aos, separation);
        py::array_t<double> x({mat.rows(), mat.cols()});
        std::copy(mat.values.begin(), mat.values.end(), x.mutable_data());
        std::vector<std::string> labels;
        for (ClassLabel l : mat.labels) labels.emplace_back(to_string(l));
        return py::make_tuple(mat.ids, labels, x);
      },
      py::arg("seed"), py::arg("n_neuro"), py::arg("n_dys"), py::arg("n_aos"),
      py::arg("separation"), "Gaussian test cohort: (ids, labels, X)");

  m.def(
      "run_experiment_json",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x,
         const std::vector<std::string>& labels, const std::vector<std::string>& ids,
         const std::vector<std::string>& schemes, int repetitions, int outer_folds,
         int inner_folds, std::uint64_t seed, const std::vector<double>& c_values,
         const std::vector<double>& gamma_values, const std::vector<int>& nf_values,
         bool class_weighting, int jobs) {
        const auto m2 = make_matrix(x, labels, ids);
        evaluation::CvPlan plan;
        plan.repetitions = repetitions;
        plan.outer_folds = outer_folds;
        plan.inner_folds = inner_folds;
        plan.seed = seed;
        std::vector<evaluation::Scheme> parsed;
        for (const auto& s : schemes) parsed.push_back(evaluation::parse_scheme(s));
        svm::SvmConfig scfg;
        scfg.class_weighting = class_weighting;
        const auto report =
            evaluation::run_experiment(m2, plan, make_grid(c_values, gamma_values, nf_values),
                                       parsed, scfg, true, {}, jobs);
        return evaluation::report_json(report);
      },
      py::arg("X"), py::arg("labels"), py::arg("ids") = std::vector<std::string>{},
      py::arg("schemes") = std::vector<std::string>{"hierarchical"},
      py::arg("repetitions") = 10, py::arg("outer_folds") = 5, py::arg("inner_folds") = 5,
      py::arg("seed") = 42, py::arg("c_values") = std::vector<double>{},
      py::arg("gamma_values") = std::vector<double>{},
      py::arg("nf_values") = std::vector<int>{}, py::arg("class_weighting") = true,
      py::arg("jobs") = 1,
      "Full repeated nested-CV protocol; returns the evaluation report as JSON text");

  m.def(
      "train_hierarchical",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x,
         const std::vector<std::string>& labels, double c1, double gamma1, int nf1, double c2,
         double gamma2, int nf2) {
        const auto m2 = make_matrix(x, labels, {});
        std::vector<std::size_t> rows(m2.rows());
        std::iota(rows.begin(), rows.end(), 0);
        const auto model = classifiers::train_hierarchical(
            m2, rows, svm::HyperParams{c1, gamma1, nf1}, svm::HyperParams{c2, gamma2, nf2});
        return classifiers::save_hierarchical(model);
      },
      py::arg("X"), py::arg("labels"), py::arg("c1"), py::arg("gamma1"), py::arg("n_f1"),
      py::arg("c2"), py::arg("gamma2"), py::arg("n_f2"),
      "Train the two-stage scheme and return the model artifact text");

  m.def(
      "predict_label",
      [](const std::string& artifact,
         py::array_t<double, py::array::c_style | py::array::forcecast> x) {
        const auto row = to_vector(x);
        const auto kind = nlohmann::json::parse(artifact).value("kind", "");
        if (kind == "hierarchical") {
          const auto model = classifiers::load_hierarchical(artifact);
          return std::string(to_string(classifiers::predict_hierarchical(model, row).label));
        }
        if (kind == "ovo") {
          const auto model = classifiers::load_ovo(artifact);
          return std::string(to_string(classifiers::predict_ovo(model, row)));
        }
        if (kind == "ovr") {
          const auto model = classifiers::load_ovr(artifact);
          return std::string(to_string(classifiers::predict_ovr(model, row)));
        }
        if (kind == "svm") {
          const auto model = svm::load_model(artifact);
          return svm::decision_value(model, row) >= 0 ? model.positive_class
                                                      : model.negative_class;
        }
        throw Error(ErrorKind::Data, "unknown artifact kind \"" + kind + "\"");
      },
      py::arg("artifact"), py::arg("x"), "Predict the class of one feature row");
}
