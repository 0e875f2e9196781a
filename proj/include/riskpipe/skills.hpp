#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "riskpipe/error.hpp"
#include "riskpipe/skill_label.hpp"
#include "riskpipe/trajectory.hpp"

namespace riskpipe {

// Feature layout per window: for each joint [mean |v|, std v, mean effort,
// net position delta], then [mean aperture, net aperture delta, mean force,
// RMS velocity across joints]. F = 4 * n_joints + 4.
inline constexpr std::size_t feature_count(std::size_t n_joints) {
  return 4 * n_joints + 4;
}

inline std::vector<std::vector<double>> extract_features(const TrajectoryLog& log,
                                                         std::size_t window,
                                                         std::size_t stride) {
  const std::size_t n = log.sample_count();
  if (window < 1 || window > n)
    throw ValidationError("window: must satisfy 1 <= window <= sample count");
  if (stride < 1) throw ValidationError("stride: must be >= 1");

  const std::size_t n_windows = (n - window) / stride + 1;
  const std::size_t nj = log.joint_count();
  std::vector<std::vector<double>> out(n_windows);

  for (std::size_t w = 0; w < n_windows; ++w) {
    const std::size_t lo = w * stride;
    const std::size_t hi = lo + window;
    std::vector<double>& f = out[w];
    f.reserve(feature_count(nj));

    double sq_vel_sum = 0;
    for (std::size_t j = 0; j < nj; ++j) {
      double abs_v = 0, sum_v = 0, sum_v2 = 0, sum_e = 0;
      for (std::size_t k = lo; k < hi; ++k) {
        const double v = log.joints[j][k].velocity;
        abs_v += std::abs(v);
        sum_v += v;
        sum_v2 += v * v;
        sum_e += log.joints[j][k].effort;
      }
      sq_vel_sum += sum_v2;
      const double inv = 1.0 / static_cast<double>(window);
      const double mean_v = sum_v * inv;
      const double var_v = std::max(0.0, sum_v2 * inv - mean_v * mean_v);
      f.push_back(abs_v * inv);
      f.push_back(std::sqrt(var_v));
      f.push_back(sum_e * inv);
      f.push_back(log.joints[j][hi - 1].position - log.joints[j][lo].position);
    }
    double sum_a = 0, sum_fo = 0;
    for (std::size_t k = lo; k < hi; ++k) {
      sum_a += log.gripper[k].aperture;
      sum_fo += log.gripper[k].force;
    }
    const double inv = 1.0 / static_cast<double>(window);
    f.push_back(sum_a * inv);
    f.push_back(log.gripper[hi - 1].aperture - log.gripper[lo].aperture);
    f.push_back(sum_fo * inv);
    f.push_back(nj ? std::sqrt(sq_vel_sum * inv / static_cast<double>(nj)) : 0.0);
  }
  return out;
}

// Most frequent label; ties resolved toward the lowest ordinal.
inline SkillLabel majority_label(const std::array<std::size_t, kNumSkills>& counts) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < kNumSkills; ++i) {
    if (counts[i] > counts[best]) best = i;
  }
  return static_cast<SkillLabel>(static_cast<int>(best));
}

struct Dataset {
  std::size_t n_features = 0;
  std::size_t window = 0;
  std::size_t stride = 0;
  std::vector<std::vector<double>> features;
  std::vector<SkillLabel> labels;

  std::size_t size() const { return features.size(); }
};

// Windows a corpus of generated episodes; each window is labeled with the
// majority ground-truth label inside it.
inline Dataset build_dataset(const std::vector<ScenarioConfig>& scenarios,
                             std::size_t window, std::size_t stride) {
  if (scenarios.empty()) throw ValidationError("scenarios: list must be non-empty");
  Dataset ds;
  ds.window = window;
  ds.stride = stride;
  for (const ScenarioConfig& cfg : scenarios) {
    Episode ep = generate_episode(cfg);
    auto feats = extract_features(ep.log, window, stride);
    ds.n_features = feature_count(ep.log.joint_count());
    for (std::size_t w = 0; w < feats.size(); ++w) {
      std::array<std::size_t, kNumSkills> counts{};
      for (std::size_t k = w * stride; k < w * stride + window; ++k)
        counts[static_cast<std::size_t>(ep.ground_truth[k])]++;
      ds.features.push_back(std::move(feats[w]));
      ds.labels.push_back(majority_label(counts));
    }
  }
  return ds;
}

struct LabeledSeries {
  std::size_t window = 0;
  std::size_t stride = 0;
  std::vector<std::size_t> starts;  // window start sample indices
  std::vector<SkillLabel> labels;
  std::vector<std::array<double, kNumSkills>> probabilities;

  std::size_t size() const { return labels.size(); }
};

// Sliding majority vote over k windows (k odd). Ties keep the center label;
// the window is truncated at the series edges.
inline LabeledSeries smooth_labels(const LabeledSeries& series, std::size_t k) {
  if (k % 2 == 0 || k < 1) throw ValidationError("k: must be odd and >= 1");
  LabeledSeries out = series;
  const std::size_t n = series.labels.size();
  const std::size_t half = k / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    std::array<std::size_t, kNumSkills> counts{};
    for (std::size_t j = lo; j < hi; ++j)
      counts[static_cast<std::size_t>(series.labels[j])]++;
    std::size_t best = 0;
    bool tie = false;
    for (std::size_t c = 1; c < kNumSkills; ++c) {
      if (counts[c] > counts[best]) {
        best = c;
        tie = false;
      } else if (counts[c] == counts[best] && counts[c] > 0) {
        tie = true;
      }
    }
    out.labels[i] = tie ? series.labels[i] : static_cast<SkillLabel>(static_cast<int>(best));
  }
  return out;
}

struct Evaluation {
  double accuracy = 0;
  // confusion[truth][pred]
  std::array<std::array<std::size_t, kNumSkills>, kNumSkills> confusion{};
};

inline Evaluation evaluate(const std::vector<SkillLabel>& pred,
                           const std::vector<SkillLabel>& truth) {
  if (pred.size() != truth.size())
    throw ValidationError("pred: length differs from truth");
  if (pred.empty()) throw ValidationError("pred: empty label sequence");
  Evaluation ev;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ev.confusion[static_cast<std::size_t>(truth[i])]
                [static_cast<std::size_t>(pred[i])]++;
    if (pred[i] == truth[i]) ++hits;
  }
  ev.accuracy = static_cast<double>(hits) / static_cast<double>(pred.size());
  return ev;
}

}  // namespace riskpipe
