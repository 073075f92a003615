/**
 * Copyright 2026 The balagan-cpp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "balagan/losses.hpp"

#include <cmath>

#include "balagan/error.hpp"

namespace balagan {

void LossWeights::validate() const {
  for (double w : {lambda_ce, lambda_reg, lambda_r, lambda_f}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorKind::kConfigError, "loss weights must be finite and non-negative");
    }
  }
}

ModalityLabel::ModalityLabel(int64_t index, int64_t n_classes) : index_(index), n_classes_(n_classes) {
  if (n_classes < 1 || index < 0 || index >= n_classes) {
    throw Error(ErrorKind::kConfigError, "modality label " + std::to_string(index) + " outside [0, " +
                                             std::to_string(n_classes) + ")");
  }
}

torch::Tensor ModalityLabel::one_hot() const {
  auto v = torch::zeros({n_classes_}, torch::kFloat32);
  v[index_] = 1.0f;
  return v;
}

std::vector<ModalityLabel> make_labels(std::span<const int64_t> indices, int64_t n_classes) {
  std::vector<ModalityLabel> labels;
  labels.reserve(indices.size());
  for (auto i : indices) labels.emplace_back(i, n_classes);
  return labels;
}

torch::Tensor label_tensor(std::span<const ModalityLabel> labels) {
  std::vector<int64_t> idx;
  idx.reserve(labels.size());
  for (const auto& l : labels) idx.push_back(l.index());
  return torch::tensor(idx, torch::kInt64);
}

torch::Tensor select_scores(const torch::Tensor& scores, const torch::Tensor& labels) {
  if (scores.dim() != 2 || labels.dim() != 1 || scores.size(0) != labels.size(0)) {
    throw Error(ErrorKind::kShapeMismatch, "select_scores expects (n, c) scores and (n,) labels");
  }
  return scores.gather(1, labels.unsqueeze(1)).squeeze(1);
}

torch::Tensor hinge_d_loss(const torch::Tensor& real_at_true, const torch::Tensor& fake_at_ref) {
  return torch::relu(1.0 - real_at_true).mean() + torch::relu(1.0 + fake_at_ref).mean();
}

torch::Tensor hinge_g_loss(const torch::Tensor& fake_at_ref) { return -fake_at_ref.mean(); }

torch::Tensor reconstruction_loss(const torch::Tensor& x, const torch::Tensor& x_rec) {
  if (x.sizes() != x_rec.sizes()) {
    throw Error(ErrorKind::kShapeMismatch, "reconstruction operands differ in shape");
  }
  return (x - x_rec).abs().mean();
}

torch::Tensor feature_matching_loss(const torch::Tensor& f_fake, const torch::Tensor& f_ref) {
  if (f_fake.sizes() != f_ref.sizes()) {
    throw Error(ErrorKind::kShapeMismatch, "feature matching operands differ in shape");
  }
  return (f_fake - f_ref).abs().mean();
}

torch::Tensor classification_loss(const torch::Tensor& logits, const torch::Tensor& labels) {
  auto log_probs = torch::log_softmax(logits, 1);
  return -select_scores(log_probs, labels).mean();
}

std::string_view to_string(R1Mode mode) {
  return mode == R1Mode::kTrueClass ? "true_class" : "all_classes";
}

R1Mode parse_r1_mode(std::string_view text) {
  if (text == "true_class") return R1Mode::kTrueClass;
  if (text == "all_classes") return R1Mode::kAllClasses;
  throw Error(ErrorKind::kConfigError, "r1 mode must be true_class or all_classes");
}

torch::Tensor r1_from_scores(const torch::Tensor& selected_scores, const torch::Tensor& real) {
  if (!selected_scores.requires_grad()) return torch::zeros({}, real.options());
  // samples are independent, so the gradient of the sum is the per-sample gradient
  auto grads = torch::autograd::grad({selected_scores.sum()}, {real}, /*grad_outputs=*/{},
                                     /*retain_graph=*/true, /*create_graph=*/true,
                                     /*allow_unused=*/true)[0];
  if (!grads.defined()) return torch::zeros({}, real.options());
  auto penalty = grads.pow(2).flatten(1).sum(1).mean();
  if (!std::isfinite(penalty.item<double>())) {
    throw Error(ErrorKind::kNonFiniteGradient, "R1 input gradient is not finite");
  }
  return penalty;
}

torch::Tensor r1_penalty(const std::function<torch::Tensor(const torch::Tensor&)>& score,
                         const torch::Tensor& real) {
  auto x = real.detach().requires_grad_(true);
  return r1_from_scores(score(x), x);
}

torch::Tensor r1_penalty(Discriminator& d, const torch::Tensor& real, const torch::Tensor& labels,
                         R1Mode mode) {
  return r1_penalty(
      [&](const torch::Tensor& x) {
        auto scores = d->discriminate(x).adv_scores;
        return mode == R1Mode::kTrueClass ? select_scores(scores, labels) : scores.sum(1);
      },
      real);
}

}  // namespace balagan
