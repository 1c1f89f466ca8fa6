#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "iusp/kernels.hpp"

namespace iusp {

// Weights of the combined objective. A setup that excludes a loss term sets
// the matching alpha to zero.
struct LossWeights {
  double alpha_bce = 1.0;
  double alpha_kd = 10.0;
  double alpha_sp = 10.0;
  double alpha_iusp = 1.0;
  double kd_temperature = 1.0;
  SquashParams squash;
};

struct LossValue {
  double total = 0.0;
  std::map<std::string, double> components;  // keys: bce, kd, sp, iusp
};

// Mean binary cross entropy over all b x K elements. Probabilities are
// clamped to [1e-7, 1 - 1e-7] before the logs.
double bce_loss(const Eigen::MatrixXd& pred_probs, const Eigen::MatrixXd& targets);
// d(bce)/d(pred_probs), evaluated at the clamped probabilities.
Eigen::MatrixXd bce_loss_grad(const Eigen::MatrixXd& pred_probs,
                              const Eigen::MatrixXd& targets);

// Numerically stable mean BCE between targets in [0,1] and sigmoid(logits),
// plus its exact gradient w.r.t. the logits. This is the form the trainer
// uses so the gradient stays finite for any logit magnitude.
double bce_with_logits(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& targets);
Eigen::MatrixXd bce_with_logits_grad(const Eigen::MatrixXd& logits,
                                     const Eigen::MatrixXd& targets);

// Logit distillation for a multi-label head: per-class temperature-scaled
// sigmoid soft targets under binary cross entropy, averaged over elements.
// The teacher side is a constant; the gradient w.r.t. the student logits
// vanishes exactly when student equals teacher.
double kd_logit_loss(const Eigen::MatrixXd& student_logits,
                     const Eigen::MatrixXd& teacher_logits, double temperature);
Eigen::MatrixXd kd_logit_loss_grad(const Eigen::MatrixXd& student_logits,
                                   const Eigen::MatrixXd& teacher_logits,
                                   double temperature);

// Batch-level similarity preserving loss:
//   (1/b^2) * sum over selected (l, l') of
//       || sp_gram(teacher l) - sp_gram(student l') ||_F^2.
// `pairs` holds (teacher index, student index) into the two map lists.
double sp_loss(const std::vector<FeatureMap>& teacher_maps,
               const std::vector<FeatureMap>& student_maps,
               const std::vector<std::pair<int, int>>& pairs);
// Same value, plus the gradient w.r.t. every student map (teacher maps are
// constants). Output has one entry per student_maps element, zero where the
// map is not selected by any pair.
double sp_loss_grad(const std::vector<FeatureMap>& teacher_maps,
                    const std::vector<FeatureMap>& student_maps,
                    const std::vector<std::pair<int, int>>& pairs,
                    std::vector<FeatureMap>* dstudent_maps);

// Frame-level similarity preserving loss:
//   (1/b) * sum over batch items of || Gt~ - Gs~ ||_F^2
// where each G~ is the sigmoid-squashed frame gram of the channel-normalized
// map. The teacher map is bilinearly resized to the student's (h, w) first.
double iusp_loss(const FeatureMap& teacher_map, const FeatureMap& student_map,
                 const SquashParams& p);
double iusp_loss_grad(const FeatureMap& teacher_map, const FeatureMap& student_map,
                      const SquashParams& p, FeatureMap* dstudent_map);

// Precomputed teacher-side squashed frame grams (one per batch item), for
// callers that reuse a frozen teacher across epochs.
std::vector<Eigen::MatrixXd> iusp_teacher_grams(const FeatureMap& teacher_map,
                                                int student_h, int student_w,
                                                const SquashParams& p);
double iusp_loss_grad_cached(const std::vector<Eigen::MatrixXd>& teacher_grams,
                             const FeatureMap& student_map, const SquashParams& p,
                             FeatureMap* dstudent_map);

// Weighted combination. Components are recorded individually so training can
// log them; total = a1*bce + a2*kd + a3*sp + a4*iusp.
LossValue total_loss(double bce, double kd, double sp, double iusp,
                     const LossWeights& weights);

}  // namespace iusp
