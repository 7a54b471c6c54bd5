#include "msd/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "msd/artifact.hpp"

namespace msd::svm {

namespace {

constexpr double kTau = 1e-12;

}  // namespace

SmoResult solve_smo(const std::vector<double>& kernel, std::span<const int> y,
                    std::span<const double> box, double kkt_tolerance, int max_stall_epochs) {
  const std::size_t n = y.size();
  if (n == 0 || kernel.size() != n * n || box.size() != n)
    throw Error(ErrorKind::Internal, "solve_smo: inconsistent problem dimensions");

  const auto k = [&](std::size_t a, std::size_t b) { return kernel[a * n + b]; };
  const auto q = [&](std::size_t a, std::size_t b) { return y[a] * y[b] * k(a, b); };

  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a at a = 0

  const long epoch = static_cast<long>(n);
  const long hard_cap = 10000000;
  long iterations = 0;
  int stall_epochs = 0;
  double best_violation = std::numeric_limits<double>::infinity();
  double epoch_best = std::numeric_limits<double>::infinity();

  while (true) {
    // Maximal violating pair.
    double up = -std::numeric_limits<double>::infinity();
    double low = std::numeric_limits<double>::infinity();
    std::ptrdiff_t i = -1, j = -1;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      const bool in_up = (y[t] > 0 && alpha[t] < box[t]) || (y[t] < 0 && alpha[t] > 0);
      const bool in_low = (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < box[t]);
      if (in_up && v > up) {
        up = v;
        i = static_cast<std::ptrdiff_t>(t);
      }
      if (in_low && v < low) {
        low = v;
        j = static_cast<std::ptrdiff_t>(t);
      }
    }
    const double violation = up - low;
    if (i < 0 || j < 0 || violation <= kkt_tolerance) break;

    epoch_best = std::min(epoch_best, violation);
    if (iterations > 0 && iterations % epoch == 0) {
      if (epoch_best >= best_violation - 1e-12) {
        if (++stall_epochs >= max_stall_epochs)
          throw Error(ErrorKind::Convergence,
                      "svm: no progress for " + std::to_string(max_stall_epochs) +
                          " epochs (KKT violation " + std::to_string(violation) + ")");
      } else {
        stall_epochs = 0;
        best_violation = epoch_best;
      }
      epoch_best = std::numeric_limits<double>::infinity();
    }
    if (++iterations > hard_cap)
      throw Error(ErrorKind::Convergence, "svm: iteration cap exceeded");

    const std::size_t a = static_cast<std::size_t>(i);
    const std::size_t b = static_cast<std::size_t>(j);
    const double old_ai = alpha[a];
    const double old_aj = alpha[b];
    const double ca = box[a];
    const double cb = box[b];

    double quad = k(a, a) + k(b, b) - 2.0 * k(a, b);
    if (quad <= 0) quad = kTau;
    if (y[a] != y[b]) {
      const double delta = (-grad[a] - grad[b]) / quad;
      const double diff = alpha[a] - alpha[b];
      alpha[a] += delta;
      alpha[b] += delta;
      if (diff > 0) {
        if (alpha[b] < 0) {
          alpha[b] = 0;
          alpha[a] = diff;
        }
      } else {
        if (alpha[a] < 0) {
          alpha[a] = 0;
          alpha[b] = -diff;
        }
      }
      if (diff > ca - cb) {
        if (alpha[a] > ca) {
          alpha[a] = ca;
          alpha[b] = ca - diff;
        }
      } else {
        if (alpha[b] > cb) {
          alpha[b] = cb;
          alpha[a] = cb + diff;
        }
      }
    } else {
      const double delta = (grad[a] - grad[b]) / quad;
      const double sum = alpha[a] + alpha[b];
      alpha[a] -= delta;
      alpha[b] += delta;
      if (sum > ca) {
        if (alpha[a] > ca) {
          alpha[a] = ca;
          alpha[b] = sum - ca;
        }
      } else {
        if (alpha[b] < 0) {
          alpha[b] = 0;
          alpha[a] = sum;
        }
      }
      if (sum > cb) {
        if (alpha[b] > cb) {
          alpha[b] = cb;
          alpha[a] = sum - cb;
        }
      } else {
        if (alpha[a] < 0) {
          alpha[a] = 0;
          alpha[b] = sum;
        }
      }
    }

    const double da = alpha[a] - old_ai;
    const double db = alpha[b] - old_aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(t, a) * da + q(t, b) * db;
  }

  // Bias from the free support vectors, or the violation midpoint.
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= box[t]) {
      if (y[t] < 0)
        upper = std::min(upper, yg);
      else
        lower = std::max(lower, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] > 0)
        upper = std::min(upper, yg);
      else
        lower = std::max(lower, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (upper + lower) / 2.0;

  SmoResult res;
  res.alpha = std::move(alpha);
  res.bias = -rho;
  res.iterations = iterations;
  double obj = 0.0;
  for (std::size_t t = 0; t < n; ++t) obj += res.alpha[t] * (grad[t] - 1.0);
  res.objective = -obj / 2.0;
  return res;
}

SvmModel train_svm(const features::FeatureMatrix& m, std::span<const std::size_t> rows,
                   std::span<const int> y, const HyperParams& hp,
                   const selection::SelectionMask& mask, const std::string& positive_class,
                   const std::string& negative_class, const SvmConfig& cfg) {
  const std::size_t n = rows.size();
  if (n != y.size()) throw Error(ErrorKind::Internal, "train_svm: rows/labels size mismatch");
  if (hp.c <= 0 || hp.gamma <= 0)
    throw Error(ErrorKind::Data, "train_svm: C and gamma must be positive");

  std::size_t n_pos = 0, n_neg = 0;
  for (int v : y) (v > 0 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw Error(ErrorKind::Data, "train_svm: single-class input (" + positive_class + " vs " +
                                     negative_class + ")");

  SvmModel model;
  model.params = hp;
  model.positive_class = positive_class;
  model.negative_class = negative_class;
  model.mask = mask;

  // Drop selected features with zero variance on the training rows, then
  // fit the scaler on what remains.
  std::vector<std::size_t> kept;
  for (std::size_t f : mask.indices) {
    double mean = 0.0;
    for (std::size_t r : rows) mean += m.at(r, f);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r : rows) {
      const double d = m.at(r, f) - mean;
      var += d * d;
    }
    if (var > 0.0) {
      kept.push_back(f);
      model.scaler.mean.push_back(mean);
      model.scaler.std.push_back(std::sqrt(var / static_cast<double>(n)));
    }
  }
  if (kept.empty())
    throw Error(ErrorKind::Data, "train_svm: every selected feature is constant on training data");
  model.mask.indices = kept;
  model.mask.n_f = kept.size();
  for (std::size_t f : kept)
    model.feature_names.push_back(f < m.feature_names.size() ? m.feature_names[f]
                                                             : "f" + std::to_string(f));

  const std::size_t dim = kept.size();
  std::vector<double> x(n * dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < dim; ++c)
      x[i * dim + c] = (m.at(rows[i], kept[c]) - model.scaler.mean[c]) / model.scaler.std[c];

  model.weight_positive =
      cfg.class_weighting ? static_cast<double>(n) / (2.0 * static_cast<double>(n_pos)) : 1.0;
  model.weight_negative =
      cfg.class_weighting ? static_cast<double>(n) / (2.0 * static_cast<double>(n_neg)) : 1.0;

  std::vector<double> kernel(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    kernel[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        const double d = x[i * dim + c] - x[j * dim + c];
        d2 += d * d;
      }
      const double v = std::exp(-hp.gamma * d2);
      kernel[i * n + j] = v;
      kernel[j * n + i] = v;
    }
  }

  std::vector<double> box(n);
  for (std::size_t i = 0; i < n; ++i)
    box[i] = hp.c * (y[i] > 0 ? model.weight_positive : model.weight_negative);

  const SmoResult res = solve_smo(kernel, y, box, cfg.kkt_tolerance, cfg.max_stall_epochs);

  double balance = 0.0;
  for (std::size_t i = 0; i < n; ++i) balance += res.alpha[i] * y[i];
  if (std::abs(balance) > 1e-6)
    throw Error(ErrorKind::Internal, "train_svm: dual equality constraint violated");

  bool sv_pos = false, sv_neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (res.alpha[i] <= 0.0) continue;
    (y[i] > 0 ? sv_pos : sv_neg) = true;
    model.dual_coefs.push_back(res.alpha[i] * y[i]);
    model.support_vectors.insert(model.support_vectors.end(), x.begin() + static_cast<std::ptrdiff_t>(i * dim),
                                 x.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
  }
  if (!sv_pos || !sv_neg)
    throw Error(ErrorKind::Internal, "train_svm: missing support vectors for a class");
  model.n_sv = model.dual_coefs.size();
  model.dim = dim;
  model.bias = res.bias;
  return model;
}

double decision_value(const SvmModel& m, std::span<const double> x_full) {
  double f = m.bias;
  std::vector<double> z(m.dim);
  for (std::size_t c = 0; c < m.dim; ++c) {
    const std::size_t src = m.mask.indices[c];
    if (src >= x_full.size())
      throw Error(ErrorKind::Data, "decision_value: input has too few features");
    z[c] = (x_full[src] - m.scaler.mean[c]) / m.scaler.std[c];
  }
  for (std::size_t i = 0; i < m.n_sv; ++i) {
    double d2 = 0.0;
    const double* sv = m.support_vectors.data() + i * m.dim;
    for (std::size_t c = 0; c < m.dim; ++c) {
      const double d = sv[c] - z[c];
      d2 += d * d;
    }
    f += m.dual_coefs[i] * std::exp(-m.params.gamma * d2);
  }
  return f;
}

namespace {

using nlohmann::json;

json scores_to_json(const std::vector<double>& scores) {
  json arr = json::array();
  for (double s : scores) {
    if (std::isinf(s))
      arr.push_back("inf");
    else
      arr.push_back(s);
  }
  return arr;
}

std::vector<double> scores_from_json(const json& arr) {
  std::vector<double> out;
  for (const auto& v : arr) {
    if (v.is_string())
      out.push_back(std::numeric_limits<double>::infinity());
    else
      out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

nlohmann::json model_to_json(const SvmModel& m) {
  json j;
  j["schema_version"] = artifact::kSchemaVersion;
  j["kind"] = "svm";
  j["hyperparams"] = {{"c", m.params.c}, {"gamma", m.params.gamma}, {"n_f", m.params.n_f}};
  j["class_map"] = {{"positive", m.positive_class}, {"negative", m.negative_class}};
  j["class_weights"] = {{"positive", m.weight_positive}, {"negative", m.weight_negative}};
  j["scaler"] = {{"mean", m.scaler.mean}, {"std", m.scaler.std}};
  j["mask"] = {{"indices", m.mask.indices},
               {"scores", scores_to_json(m.mask.scores)},
               {"n_f", m.mask.n_f}};
  j["feature_names"] = m.feature_names;
  j["n_sv"] = m.n_sv;
  j["dim"] = m.dim;
  j["support_vectors"] = m.support_vectors;
  j["dual_coefs"] = m.dual_coefs;
  j["bias"] = m.bias;
  return j;
}

SvmModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("kind", "") != "svm")
    throw Error(ErrorKind::Data, "model artifact: not an svm model");
  SvmModel m;
  m.params.c = j.at("hyperparams").at("c").get<double>();
  m.params.gamma = j.at("hyperparams").at("gamma").get<double>();
  m.params.n_f = j.at("hyperparams").at("n_f").get<int>();
  m.positive_class = j.at("class_map").at("positive").get<std::string>();
  m.negative_class = j.at("class_map").at("negative").get<std::string>();
  m.weight_positive = j.at("class_weights").at("positive").get<double>();
  m.weight_negative = j.at("class_weights").at("negative").get<double>();
  m.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
  m.scaler.std = j.at("scaler").at("std").get<std::vector<double>>();
  m.mask.indices = j.at("mask").at("indices").get<std::vector<std::size_t>>();
  m.mask.scores = scores_from_json(j.at("mask").at("scores"));
  m.mask.n_f = j.at("mask").at("n_f").get<std::size_t>();
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  m.n_sv = j.at("n_sv").get<std::size_t>();
  m.dim = j.at("dim").get<std::size_t>();
  m.support_vectors = j.at("support_vectors").get<std::vector<double>>();
  m.dual_coefs = j.at("dual_coefs").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  if (m.support_vectors.size() != m.n_sv * m.dim || m.dual_coefs.size() != m.n_sv ||
      m.scaler.mean.size() != m.dim || m.scaler.std.size() != m.dim ||
      m.mask.indices.size() != m.dim)
    throw Error(ErrorKind::Data, "model artifact: inconsistent dimensions");
  return m;
}

std::string save_model(const SvmModel& m) { return artifact::seal(model_to_json(m)); }

SvmModel load_model(const std::string& bytes) {
  return model_from_json(artifact::unseal(bytes));
}

}  // namespace msd::svm
