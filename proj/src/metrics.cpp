#include "iusp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iusp/error.hpp"

namespace iusp {

namespace {

// Core sweep shared by micro and class-wise variants. Thresholds are every
// distinct score plus -inf/+inf sentinels; a cell predicts positive when
// score >= threshold. Precision at TP+FP = 0 is defined as 1.
std::vector<PrPoint> curve_from_pooled(const std::vector<double>& scores,
                                       const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw InvalidInput("pr_curve: scores/labels length mismatch");
  if (scores.empty()) throw InvalidInput("pr_curve: empty input");
  long total_pos = 0;
  for (int l : labels) total_pos += l;
  if (total_pos == 0)
    throw UndefinedRecallError("pr_curve: no positive labels; recall undefined");

  // Sort score/label pairs descending by score; sweeping the threshold down
  // through the distinct values then gives cumulative TP/FP tallies.
  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  std::vector<PrPoint> pts;
  // +inf sentinel: nothing predicted positive.
  pts.push_back({0.0, 1.0});
  long tp = 0, fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    // Take every cell tied at this score: they flip together.
    while (i < order.size() && scores[order[i]] == threshold) {
      if (labels[order[i]]) ++tp; else ++fp;
      ++i;
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    pts.push_back({recall, precision});
  }
  // The -inf sentinel predicts everything positive, which duplicates the
  // final distinct-score point; the merge below absorbs it.
  pts.push_back({1.0, static_cast<double>(tp) / static_cast<double>(tp + fp)});

  std::sort(pts.begin(), pts.end(), [](const PrPoint& a, const PrPoint& b) {
    return a.recall < b.recall;
  });
  // Merge duplicate recalls, keeping the maximum precision.
  std::vector<PrPoint> merged;
  for (const auto& p : pts) {
    if (!merged.empty() && merged.back().recall == p.recall)
      merged.back().precision = std::max(merged.back().precision, p.precision);
    else
      merged.push_back(p);
  }
  return merged;
}

double trapezoid(const std::vector<PrPoint>& pts) {
  double area = 0.0;
  for (size_t i = 1; i < pts.size(); ++i)
    area += (pts[i].recall - pts[i - 1].recall) *
            (pts[i].precision + pts[i - 1].precision) * 0.5;
  return area;
}

void pool(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& labels,
          std::vector<double>* s, std::vector<int>* l) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols())
    throw InvalidInput("auprc: scores/labels shape mismatch");
  s->reserve(static_cast<size_t>(scores.size()));
  l->reserve(static_cast<size_t>(scores.size()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i)
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      if (!std::isfinite(scores(i, j)))
        throw InvalidInput("auprc: non-finite score");
      s->push_back(scores(i, j));
      l->push_back(labels(i, j) != 0.0 ? 1 : 0);
    }
}

}  // namespace

std::vector<PrPoint> pr_curve(const std::vector<double>& scores,
                              const std::vector<int>& labels) {
  return curve_from_pooled(scores, labels);
}

double auprc(const std::vector<double>& scores, const std::vector<int>& labels) {
  return trapezoid(curve_from_pooled(scores, labels));
}

double micro_auprc(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& labels) {
  std::vector<double> s;
  std::vector<int> l;
  pool(scores, labels, &s, &l);
  return auprc(s, l);
}

std::vector<double> classwise_auprc(const Eigen::MatrixXd& scores,
                                    const Eigen::MatrixXd& labels) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols())
    throw InvalidInput("classwise_auprc: shape mismatch");
  std::vector<double> out;
  out.reserve(static_cast<size_t>(scores.cols()));
  for (Eigen::Index k = 0; k < scores.cols(); ++k) {
    std::vector<double> s;
    std::vector<int> l;
    bool any_pos = false;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      s.push_back(scores(i, k));
      const int lab = labels(i, k) != 0.0 ? 1 : 0;
      any_pos = any_pos || lab;
      l.push_back(lab);
    }
    out.push_back(any_pos ? auprc(s, l) : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

}  // namespace iusp
