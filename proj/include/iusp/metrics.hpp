#pragma once

#include <Eigen/Dense>
#include <vector>

namespace iusp {

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

// Precision-recall curve for one pooled score/label set. The threshold set
// is every distinct score plus -inf/+inf sentinels; a score counts positive
// when score >= threshold. When no prediction is positive the precision is
// defined as 1. Points come back sorted by recall with duplicate recalls
// collapsed to their maximum precision. Labels must contain at least one
// positive, otherwise UndefinedRecallError is thrown.
std::vector<PrPoint> pr_curve(const std::vector<double>& scores,
                              const std::vector<int>& labels);

// Trapezoidal area under pr_curve().
double auprc(const std::vector<double>& scores, const std::vector<int>& labels);

// Micro average: every (item, class) cell of the n x K matrices is pooled
// into one set before the curve is traced.
double micro_auprc(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& labels);

// One AUPRC per class column. Classes with no positive labels are reported
// as NaN rather than throwing, so a small split can still be summarized.
std::vector<double> classwise_auprc(const Eigen::MatrixXd& scores,
                                    const Eigen::MatrixXd& labels);

}  // namespace iusp
