// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#include "xdface/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace xdface {

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw Error(ErrorCode::DimMismatch, "predictions and labels differ in length");
  }
  if (predictions.empty()) throw Error(ErrorCode::EmptyEval, "accuracy of an empty test set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::DimMismatch, "scores and labels differ in length");
  RocCurve curve;
  for (int l : labels) (l > 0 ? curve.n_genuine : curve.n_impostor) += 1;
  if (curve.n_genuine == 0 || curve.n_impostor == 0) {
    throw Error(ErrorCode::DegenerateLabels, "ROC needs genuine and impostor scores");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const double ng = static_cast<double>(curve.n_genuine);
  const double ni = static_cast<double>(curve.n_impostor);
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t accepted_genuine = 0, accepted_impostor = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == t; ++i) {
      (labels[order[i]] > 0 ? accepted_genuine : accepted_impostor) += 1;
    }
    curve.points.push_back({t, static_cast<double>(accepted_impostor) / ni,
                            static_cast<double>(accepted_genuine) / ng});
  }
  return curve;
}

double eer(const RocCurve& curve) {
  if (curve.points.empty()) throw Error(ErrorCode::InvalidArgument, "empty ROC curve");
  auto gap = [](const RocPoint& p) { return p.fmr - (1.0 - p.tmr); };
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const double g = gap(curve.points[i]);
    if (g == 0.0) return curve.points[i].fmr;
    if (g > 0.0) {
      if (i == 0) return curve.points[0].fmr;
      const RocPoint& a = curve.points[i - 1];
      const RocPoint& b = curve.points[i];
      const double ga = gap(a);
      const double lambda = -ga / (g - ga);
      return a.fmr + lambda * (b.fmr - a.fmr);
    }
  }
  return curve.points.back().fmr;
}

TimingReport timing_report(const Model& model, const Eigen::MatrixXf& features, int repetitions) {
  if (features.rows() == 0) throw Error(ErrorCode::EmptyEval, "timing needs at least one sample");
  if (repetitions < 1) throw Error(ErrorCode::InvalidArgument, "timing needs at least one repetition");
  using Clock = std::chrono::steady_clock;
  std::vector<double> latencies;
  latencies.reserve(static_cast<std::size_t>(features.rows()) * static_cast<std::size_t>(repetitions));
  volatile int sink = 0;
  for (int r = 0; r < repetitions; ++r) {
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      const Eigen::VectorXf x = features.row(i).transpose();
      const auto start = Clock::now();
      sink = sink + predict(model, x);
      latencies.push_back(std::chrono::duration<double>(Clock::now() - start).count());
    }
  }
  TimingReport rep;
  rep.samples = static_cast<std::size_t>(features.rows());
  rep.repetitions = repetitions;
  rep.measurements = latencies.size();
  rep.mean_seconds = std::accumulate(latencies.begin(), latencies.end(), 0.0) / static_cast<double>(latencies.size());
  std::sort(latencies.begin(), latencies.end());
  auto quantile = [&](double q) {
    return latencies[static_cast<std::size_t>(q * static_cast<double>(latencies.size() - 1))];
  };
  rep.p50_seconds = quantile(0.5);
  rep.p95_seconds = quantile(0.95);
  rep.max_seconds = latencies.back();
  return rep;
}

EvalReport evaluate(const Model& model, const Eigen::MatrixXf& features, const Eigen::VectorXi& labels) {
  if (features.rows() != labels.size()) throw Error(ErrorCode::DimMismatch, "features and labels differ in count");
  if (features.rows() == 0) throw Error(ErrorCode::EmptyEval, "empty test set");
  const auto n = static_cast<std::size_t>(features.rows());
  std::vector<int> predicted(n), truth(n);
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXf x = features.row(static_cast<Eigen::Index>(i)).transpose();
    predicted[i] = predict(model, x);
    scores[i] = score(model, x);
    truth[i] = labels[static_cast<Eigen::Index>(i)];
  }
  EvalReport report;
  report.classifier = to_string(kind_of(model));
  report.accuracy = accuracy(predicted, truth);
  report.roc = roc_curve(scores, truth);
  report.eer = eer(report.roc);
  report.n_test = n;
  return report;
}

std::string format_timing(const TimingReport& t) {
  std::ostringstream out;
  out << std::setprecision(9);
  out << "timing_samples=" << t.samples << '\n'
      << "timing_repetitions=" << t.repetitions << '\n'
      << "timing_measurements=" << t.measurements << '\n'
      << "mean_predict_latency_s=" << t.mean_seconds << '\n'
      << "p50_predict_latency_s=" << t.p50_seconds << '\n'
      << "p95_predict_latency_s=" << t.p95_seconds << '\n'
      << "max_predict_latency_s=" << t.max_seconds << '\n';
  return out.str();
}

std::string format_report(const EvalReport& r, bool with_timing) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "classifier=" << r.classifier << '\n'
      << "n_test=" << r.n_test << '\n'
      << "n_genuine=" << r.roc.n_genuine << '\n'
      << "n_impostor=" << r.roc.n_impostor << '\n'
      << "accuracy=" << r.accuracy << '\n'
      << "eer=" << r.eer << '\n'
      << "roc_points=" << r.roc.points.size() << '\n';
  if (with_timing && r.timing) out << format_timing(*r.timing);
  return out.str();
}

void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << std::setprecision(17) << "threshold,fmr,tmr\n";
  for (const auto& p : curve.points) out << p.threshold << ',' << p.fmr << ',' << p.tmr << '\n';
}

void write_roc_svg(const RocCurve& curve, double eer_value, const std::filesystem::path& path) {
  constexpr double size = 400.0, margin = 40.0;
  auto px = [&](double fmr) { return margin + fmr * size; };
  auto py = [&](double tmr) { return margin + (1.0 - tmr) * size; };
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << std::setprecision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * margin << "\" height=\""
      << size + 2 * margin << "\">\n";
  out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << size << "\" height=\"" << size
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << px(0) << "\" y1=\"" << py(1) << "\" x2=\"" << px(1) << "\" y2=\"" << py(0)
      << "\" stroke=\"gray\" stroke-dasharray=\"4\"/>\n";
  out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (const auto& p : curve.points) out << px(p.fmr) << ',' << py(p.tmr) << ' ';
  out << "\"/>\n";
  out << "<circle cx=\"" << px(eer_value) << "\" cy=\"" << py(1.0 - eer_value)
      << "\" r=\"5\" fill=\"crimson\"/>\n";
  out << "<text x=\"" << px(eer_value) + 8 << "\" y=\"" << py(1.0 - eer_value) + 16 << "\" font-size=\"12\">EER="
      << eer_value << "</text>\n";
  out << "<text x=\"" << margin + size / 2 - 15 << "\" y=\"" << size + 2 * margin - 10
      << "\" font-size=\"12\">FMR</text>\n";
  out << "<text x=\"5\" y=\"" << margin + size / 2 << "\" font-size=\"12\">TMR</text>\n";
  out << "</svg>\n";
}

}  // namespace xdface
