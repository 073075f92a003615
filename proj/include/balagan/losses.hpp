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

#ifndef BALAGAN_LOSSES_HPP
#define BALAGAN_LOSSES_HPP

#include <torch/torch.h>

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "balagan/networks.hpp"

namespace balagan {

// Coefficients of the two total objectives. All must be finite and >= 0.
struct LossWeights {
  double lambda_ce = 1.0;
  double lambda_reg = 10.0;
  double lambda_r = 0.1;
  double lambda_f = 1.0;

  void validate() const;
};

// m(x) together with the size of the class set it indexes.
class ModalityLabel {
 public:
  ModalityLabel(int64_t index, int64_t n_classes);
  int64_t index() const { return index_; }
  int64_t n_classes() const { return n_classes_; }
  torch::Tensor one_hot() const;

 private:
  int64_t index_;
  int64_t n_classes_;
};

std::vector<ModalityLabel> make_labels(std::span<const int64_t> indices, int64_t n_classes);
torch::Tensor label_tensor(std::span<const ModalityLabel> labels);

// The score of row i at column labels[i]: D_adv(.)_{m(.)}.
torch::Tensor select_scores(const torch::Tensor& scores, const torch::Tensor& labels);

// mean(max(0, 1 - real)) + mean(max(0, 1 + fake))
torch::Tensor hinge_d_loss(const torch::Tensor& real_at_true, const torch::Tensor& fake_at_ref);
// -mean(fake)
torch::Tensor hinge_g_loss(const torch::Tensor& fake_at_ref);
// mean |x - x_rec| over all elements
torch::Tensor reconstruction_loss(const torch::Tensor& x, const torch::Tensor& x_rec);
// mean |f_fake - f_ref| over all elements
torch::Tensor feature_matching_loss(const torch::Tensor& f_fake, const torch::Tensor& f_ref);
// mean over the batch of -log softmax(logits)[label]
torch::Tensor classification_loss(const torch::Tensor& logits, const torch::Tensor& labels);

// Which adversarial output the gradient penalty differentiates.
enum class R1Mode {
  kTrueClass,   // D_adv(x)_{m(x)}
  kAllClasses,  // sum_i D_adv(x)_i
};

std::string_view to_string(R1Mode mode);
R1Mode parse_r1_mode(std::string_view text);

// Mean over the batch of ||grad_x score(x)_i||^2, where `score` maps an
// (n, ...) batch to (n,) per-sample scores. The graph is kept so the
// penalty can itself be differentiated w.r.t. the scorer's parameters.
// Throws NonFiniteGradient.
torch::Tensor r1_penalty(const std::function<torch::Tensor(const torch::Tensor&)>& score,
                         const torch::Tensor& real);
torch::Tensor r1_penalty(Discriminator& d, const torch::Tensor& real, const torch::Tensor& labels,
                         R1Mode mode = R1Mode::kTrueClass);

// Variant for a caller that already holds the real-batch scores; `real` must
// require grad and `selected_scores` must have been computed from it.
torch::Tensor r1_from_scores(const torch::Tensor& selected_scores, const torch::Tensor& real);

template <typename T>
struct DiscriminatorTerms {
  T gan;
  T ce;
  T r1;
};

template <typename T>
struct GeneratorTerms {
  T gan;
  T rec;
  T fm;
};

// L_GAN(D) + lambda_ce L_CE(D) + lambda_reg R1(D)
template <typename T>
T total_d_loss(const DiscriminatorTerms<T>& t, const LossWeights& w) {
  return t.gan + t.ce * w.lambda_ce + t.r1 * w.lambda_reg;
}

// L_GAN(G) + lambda_r L_R(G) + lambda_f L_FM(G)
template <typename T>
T total_g_loss(const GeneratorTerms<T>& t, const LossWeights& w) {
  return t.gan + t.rec * w.lambda_r + t.fm * w.lambda_f;
}

}  // namespace balagan

#endif  // BALAGAN_LOSSES_HPP
