#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "riskpipe/detail/json_util.hpp"
#include "riskpipe/error.hpp"
#include "riskpipe/rng.hpp"
#include "riskpipe/skills.hpp"

namespace riskpipe {

struct MlpHyper {
  std::size_t h1 = 32;
  std::size_t h2 = 16;
  std::size_t epochs = 50;
  std::size_t batch = 32;
  double learning_rate = 0.01;
  std::uint64_t seed = 1;
};

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;  // out

  bool operator==(const DenseLayer&) const = default;
};

// Feed-forward net [F, H1, H2, 5] with tanh hidden layers and a softmax
// output; carries the training-set normalization statistics and the window
// geometry its features were extracted with.
struct MlpModel {
  std::vector<DenseLayer> layers;
  std::vector<double> norm_mean;
  std::vector<double> norm_std;  // entries floored at 1e-8
  std::size_t window = 1;
  std::size_t stride = 1;

  bool operator==(const MlpModel&) const = default;

  std::size_t feature_count() const { return layers.empty() ? 0 : layers.front().in; }

  void validate() const {
    if (layers.empty()) throw ValidationError("layers: model has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const DenseLayer& l = layers[i];
      if (l.w.size() != l.in * l.out || l.b.size() != l.out)
        throw ValidationError("layers: shape mismatch in layer " + std::to_string(i));
      if (i + 1 < layers.size() && layers[i + 1].in != l.out)
        throw ValidationError("layers: layer " + std::to_string(i + 1) +
                              " input does not chain");
    }
    if (layers.back().out != kNumSkills)
      throw ValidationError("layers: output size must be " + std::to_string(kNumSkills));
    if (norm_mean.size() != layers.front().in || norm_std.size() != layers.front().in)
      throw ValidationError("norm: statistics size must equal feature count");
    for (double s : norm_std) {
      if (!(s > 0)) throw ValidationError("norm: std entries must be > 0");
    }
  }
};

namespace detail {

inline void softmax_inplace(std::vector<double>& z) {
  double mx = *std::max_element(z.begin(), z.end());
  double sum = 0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

inline std::vector<double> normalize_row(const MlpModel& m,
                                         const std::vector<double>& x) {
  if (x.size() != m.feature_count())
    throw ValidationError("features: dimension " + std::to_string(x.size()) +
                          " does not match model input " +
                          std::to_string(m.feature_count()));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = (x[i] - m.norm_mean[i]) / m.norm_std[i];
  return out;
}

// Forward pass over normalized input; keeps per-layer activations so the
// backward pass can reuse them. activations[0] is the input row.
inline std::vector<std::vector<double>> forward_activations(
    const MlpModel& m, const std::vector<double>& x_norm) {
  std::vector<std::vector<double>> acts;
  acts.reserve(m.layers.size() + 1);
  acts.push_back(x_norm);
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const DenseLayer& l = m.layers[li];
    const std::vector<double>& a = acts.back();
    std::vector<double> z(l.out);
    for (std::size_t o = 0; o < l.out; ++o) {
      double s = l.b[o];
      const double* row = &l.w[o * l.in];
      for (std::size_t i = 0; i < l.in; ++i) s += row[i] * a[i];
      z[o] = s;
    }
    const bool last = li + 1 == m.layers.size();
    if (last) {
      softmax_inplace(z);
    } else {
      for (double& v : z) v = std::tanh(v);
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace detail

struct MlpGradients {
  std::vector<std::vector<double>> w;  // per layer, same shapes as the model
  std::vector<std::vector<double>> b;
};

// Mean cross-entropy of the batch (raw feature rows; normalization applied
// internally).
inline double mlp_loss(const MlpModel& m,
                       const std::vector<std::vector<double>>& rows,
                       const std::vector<SkillLabel>& labels) {
  if (rows.empty() || rows.size() != labels.size())
    throw ValidationError("batch: empty or size mismatch with labels");
  double total = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto acts = detail::forward_activations(m, detail::normalize_row(m, rows[r]));
    const double p = acts.back()[static_cast<std::size_t>(labels[r])];
    total += -std::log(std::max(p, 1e-300));
  }
  return total / static_cast<double>(rows.size());
}

// Analytic gradient of the mean cross-entropy via backpropagation.
inline MlpGradients mlp_gradients(const MlpModel& m,
                                  const std::vector<std::vector<double>>& rows,
                                  const std::vector<SkillLabel>& labels) {
  if (rows.empty() || rows.size() != labels.size())
    throw ValidationError("batch: empty or size mismatch with labels");
  MlpGradients g;
  g.w.resize(m.layers.size());
  g.b.resize(m.layers.size());
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    g.w[li].assign(m.layers[li].w.size(), 0.0);
    g.b[li].assign(m.layers[li].b.size(), 0.0);
  }
  const double inv_batch = 1.0 / static_cast<double>(rows.size());

  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto acts = detail::forward_activations(m, detail::normalize_row(m, rows[r]));
    // softmax + cross-entropy: delta = p - onehot(y)
    std::vector<double> delta = acts.back();
    delta[static_cast<std::size_t>(labels[r])] -= 1.0;

    for (std::size_t li = m.layers.size(); li-- > 0;) {
      const DenseLayer& l = m.layers[li];
      const std::vector<double>& a_in = acts[li];
      for (std::size_t o = 0; o < l.out; ++o) {
        const double d = delta[o] * inv_batch;
        g.b[li][o] += d;
        double* grow = &g.w[li][o * l.in];
        for (std::size_t i = 0; i < l.in; ++i) grow[i] += d * a_in[i];
      }
      if (li == 0) break;
      // propagate through W and the tanh of the previous layer
      std::vector<double> prev(l.in, 0.0);
      for (std::size_t o = 0; o < l.out; ++o) {
        const double d = delta[o];
        const double* row = &l.w[o * l.in];
        for (std::size_t i = 0; i < l.in; ++i) prev[i] += row[i] * d;
      }
      const std::vector<double>& a_prev = acts[li];
      for (std::size_t i = 0; i < l.in; ++i)
        prev[i] *= 1.0 - a_prev[i] * a_prev[i];
      delta = std::move(prev);
    }
  }
  return g;
}

// Fresh model with uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] weights, zero
// biases and identity normalization.
inline MlpModel init_model(std::size_t n_features, const MlpHyper& hyper) {
  MlpModel m;
  Rng rng(hyper.seed);
  const std::size_t sizes[4] = {n_features, hyper.h1, hyper.h2, kNumSkills};
  for (int li = 0; li < 3; ++li) {
    DenseLayer l;
    l.in = sizes[li];
    l.out = sizes[li + 1];
    l.w.resize(l.in * l.out);
    l.b.assign(l.out, 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (double& v : l.w) v = rng.uniform(-bound, bound);
    m.layers.push_back(std::move(l));
  }
  m.norm_mean.assign(n_features, 0.0);
  m.norm_std.assign(n_features, 1.0);
  return m;
}

// Mini-batch SGD on the mean cross-entropy. Deterministic for a given
// dataset + hyper (shuffling and init run off the seeded counter RNG).
inline MlpModel train(const Dataset& dataset, const MlpHyper& hyper) {
  if (dataset.size() == 0) throw ValidationError("dataset: empty");
  if (hyper.h1 < 1 || hyper.h2 < 1)
    throw ValidationError("hyper: hidden sizes must be >= 1");
  if (hyper.batch < 1) throw ValidationError("hyper: batch must be >= 1");
  {
    std::set<SkillLabel> distinct(dataset.labels.begin(), dataset.labels.end());
    if (distinct.size() < 2)
      throw ValidationError("dataset: needs >= 2 classes, got single-class data");
  }

  const std::size_t n = dataset.size();
  const std::size_t nf = dataset.n_features;
  MlpModel m = init_model(nf, hyper);
  m.window = dataset.window;
  m.stride = dataset.stride;

  // Training-set normalization statistics (population std, floored).
  for (std::size_t f = 0; f < nf; ++f) {
    double sum = 0;
    for (const auto& row : dataset.features) sum += row[f];
    const double mean = sum / static_cast<double>(n);
    double var = 0;
    for (const auto& row : dataset.features) {
      const double d = row[f] - mean;
      var += d * d;
    }
    m.norm_mean[f] = mean;
    m.norm_std[f] = std::max(std::sqrt(var / static_cast<double>(n)), 1e-8);
  }

  std::vector<std::vector<double>> normalized(n);
  for (std::size_t r = 0; r < n; ++r)
    normalized[r] = detail::normalize_row(m, dataset.features[r]);

  // Normalization already applied; give the SGD loop an identity-normalizing
  // view of the model so rows are not normalized twice.
  MlpModel work = m;
  std::fill(work.norm_mean.begin(), work.norm_mean.end(), 0.0);
  std::fill(work.norm_std.begin(), work.norm_std.end(), 1.0);

  Rng shuffle_rng(splitmix64(hyper.seed ^ 0x5D5B1EA9ULL));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::vector<std::vector<double>> batch_rows;
  std::vector<SkillLabel> batch_labels;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.next_index(i)]);
    for (std::size_t start = 0; start < n; start += hyper.batch) {
      const std::size_t stop = std::min(n, start + hyper.batch);
      batch_rows.clear();
      batch_labels.clear();
      for (std::size_t i = start; i < stop; ++i) {
        batch_rows.push_back(normalized[order[i]]);
        batch_labels.push_back(dataset.labels[order[i]]);
      }
      MlpGradients g = mlp_gradients(work, batch_rows, batch_labels);
      for (std::size_t li = 0; li < work.layers.size(); ++li) {
        DenseLayer& l = work.layers[li];
        for (std::size_t i = 0; i < l.w.size(); ++i)
          l.w[i] -= hyper.learning_rate * g.w[li][i];
        for (std::size_t i = 0; i < l.b.size(); ++i)
          l.b[i] -= hyper.learning_rate * g.b[li][i];
      }
    }
  }

  m.layers = std::move(work.layers);
  return m;
}

// Per-window class probabilities and argmax labels (ties resolved toward
// the lowest ordinal).
inline LabeledSeries predict(const MlpModel& m,
                             const std::vector<std::vector<double>>& features) {
  m.validate();
  LabeledSeries series;
  series.window = m.window;
  series.stride = m.stride;
  series.starts.reserve(features.size());
  series.labels.reserve(features.size());
  series.probabilities.reserve(features.size());
  for (std::size_t w = 0; w < features.size(); ++w) {
    auto acts = detail::forward_activations(m, detail::normalize_row(m, features[w]));
    const std::vector<double>& p = acts.back();
    std::array<double, kNumSkills> probs{};
    std::size_t best = 0;
    for (std::size_t c = 0; c < kNumSkills; ++c) {
      probs[c] = p[c];
      if (p[c] > p[best]) best = c;
    }
    series.starts.push_back(w * m.stride);
    series.labels.push_back(static_cast<SkillLabel>(static_cast<int>(best)));
    series.probabilities.push_back(probs);
  }
  return series;
}

// --- Checkpoint -------------------------------------------------------

inline std::string serialize_model_checkpoint(const MlpModel& m) {
  m.validate();
  nlohmann::ordered_json j;
  j["version"] = 1;
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const DenseLayer& l : m.layers) {
    nlohmann::ordered_json jl;
    jl["in"] = l.in;
    jl["out"] = l.out;
    jl["w"] = l.w;
    jl["b"] = l.b;
    layers.push_back(std::move(jl));
  }
  j["layers"] = std::move(layers);
  j["norm"] = {{"mean", m.norm_mean}, {"std", m.norm_std}};
  j["window"] = m.window;
  j["stride"] = m.stride;
  return j.dump() + "\n";
}

inline MlpModel parse_model_checkpoint(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid checkpoint JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("version") || !j["version"].is_number_integer())
    throw FormatError("checkpoint: missing version");
  if (j["version"] != 1)
    throw FormatError("checkpoint: unknown version " + j["version"].dump());

  MlpModel m;
  const auto& layers = detail::require_field(j, "layers", "checkpoint");
  if (!layers.is_array() || layers.empty())
    throw FormatError("checkpoint: 'layers' must be a non-empty array");
  auto read_vec = [](const nlohmann::json& v, std::string_view where) {
    if (!v.is_array()) throw FormatError(std::string(where) + ": expected array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) {
      if (!x.is_number()) throw FormatError(std::string(where) + ": expected numbers");
      out.push_back(x.get<double>());
    }
    return out;
  };
  for (const auto& jl : layers) {
    DenseLayer l;
    l.in = static_cast<std::size_t>(detail::require_double(jl, "in", "checkpoint layer"));
    l.out = static_cast<std::size_t>(detail::require_double(jl, "out", "checkpoint layer"));
    l.w = read_vec(detail::require_field(jl, "w", "checkpoint layer"), "checkpoint layer w");
    l.b = read_vec(detail::require_field(jl, "b", "checkpoint layer"), "checkpoint layer b");
    m.layers.push_back(std::move(l));
  }
  const auto& norm = detail::require_field(j, "norm", "checkpoint");
  m.norm_mean = read_vec(detail::require_field(norm, "mean", "checkpoint norm"),
                         "checkpoint norm mean");
  m.norm_std = read_vec(detail::require_field(norm, "std", "checkpoint norm"),
                        "checkpoint norm std");
  m.window = static_cast<std::size_t>(detail::require_double(j, "window", "checkpoint"));
  m.stride = static_cast<std::size_t>(detail::require_double(j, "stride", "checkpoint"));
  try {
    m.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return m;
}

}  // namespace riskpipe
