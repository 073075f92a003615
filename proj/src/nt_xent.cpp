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

#include "balagan/nt_xent.hpp"

#include "balagan/error.hpp"

namespace balagan {

namespace F = torch::nn::functional;

torch::Tensor nt_xent_loss(const torch::Tensor& embeddings, double temperature) {
  if (embeddings.dim() != 2 || embeddings.size(0) % 2 != 0) {
    throw Error(ErrorKind::kShapeMismatch, "nt_xent expects (2n, d) embeddings in view pairs");
  }
  if (embeddings.size(0) < 4) {
    throw Error(ErrorKind::kDegenerateBatch, "nt_xent needs n >= 2 pairs so negatives exist");
  }
  if (!(temperature > 0.0)) {
    throw Error(ErrorKind::kConfigError, "nt_xent temperature must be positive");
  }
  const int64_t rows = embeddings.size(0);
  auto z = F::normalize(embeddings, F::NormalizeFuncOptions().p(2).dim(1).eps(1e-12));
  auto logits = z.mm(z.t()) / temperature;
  auto self = torch::eye(rows, torch::TensorOptions().dtype(torch::kBool));
  logits = logits.masked_fill(self, -std::numeric_limits<double>::infinity());
  // partner of row i is i ^ 1
  auto idx = torch::arange(rows, torch::kInt64);
  auto partner = idx + 1 - 2 * (idx % 2);
  auto positive = logits.gather(1, partner.unsqueeze(1)).squeeze(1);
  return (torch::logsumexp(logits, 1) - positive).mean();
}

}  // namespace balagan
