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

#ifndef BALAGAN_NT_XENT_HPP
#define BALAGAN_NT_XENT_HPP

#include <torch/torch.h>

namespace balagan {

// Normalized temperature-scaled cross-entropy over a batch of 2n embeddings
// whose rows (2i, 2i+1) are the two views of image i. Rows are L2-normalized
// internally. For anchor i the candidates are all other 2n - 1 rows; the loss
// is the mean over the 2n anchors of
//
//   -log( exp(cos(z_i, z_pos(i)) / t) / sum_{j != i} exp(cos(z_i, z_j) / t) ).
//
// Differentiable. Throws DegenerateBatch when n < 2 (no negatives).
torch::Tensor nt_xent_loss(const torch::Tensor& embeddings, double temperature);

}  // namespace balagan

#endif  // BALAGAN_NT_XENT_HPP
