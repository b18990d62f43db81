// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xdface/classify.hpp"

namespace xdface {

/// Fraction of positions where predictions equal labels. Throws EmptyEval / DimMismatch.
double accuracy(std::span<const int> predictions, std::span<const int> labels);

struct RocPoint {
  double threshold;  // accept when score >= threshold
  double fmr;
  double tmr;
};

/// Exact empirical ROC, thresholds descending: a +inf sentinel at (0,0), then
/// one point per distinct score; the lowest score yields (1,1).
struct RocCurve {
  std::vector<RocPoint> points;
  std::size_t n_genuine = 0;
  std::size_t n_impostor = 0;
};

/// Labels > 0 are genuine, anything else impostor. Throws DegenerateLabels
/// unless both classes are present.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);

/// Rate where FMR equals FNMR = 1 - TMR, interpolated linearly between the
/// two curve points that straddle FMR - FNMR = 0.
double eer(const RocCurve& curve);

struct TimingReport {
  std::size_t samples = 0;
  int repetitions = 0;
  std::size_t measurements = 0;
  double mean_seconds = 0.0;
  double p50_seconds = 0.0;
  double p95_seconds = 0.0;
  double max_seconds = 0.0;
};

/// Per-sample wall-clock latency of predict(), single-threaded, over
/// `repetitions` passes of the rows of `features`.
TimingReport timing_report(const Model& model, const Eigen::MatrixXf& features, int repetitions);

struct EvalReport {
  std::string classifier;
  double accuracy = 0.0;
  double eer = 0.0;
  std::size_t n_test = 0;
  RocCurve roc;
  std::optional<TimingReport> timing;
};

/// Accuracy, ROC and EER of `model` on labelled rows (+1 / -1).
EvalReport evaluate(const Model& model, const Eigen::MatrixXf& features, const Eigen::VectorXi& labels);

/// key=value text. Timing lines are written only when `with_timing` is set,
/// so the default output is a pure function of model and data.
std::string format_report(const EvalReport& report, bool with_timing = false);
std::string format_timing(const TimingReport& timing);

void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path);
void write_roc_svg(const RocCurve& curve, double eer_value, const std::filesystem::path& path);

}  // namespace xdface
