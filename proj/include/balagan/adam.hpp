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

#ifndef BALAGAN_ADAM_HPP
#define BALAGAN_ADAM_HPP

#include <torch/torch.h>

#include <string>
#include <utility>
#include <vector>

namespace balagan {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive moment estimation over an explicit, named parameter list. Unlike
// torch::optim::Adam the moments are addressable by name, so a checkpoint can
// restore them bit-exactly. Parameters whose gradient is undefined are
// skipped entirely (their moments and step count stay as they were).
class Adam {
 public:
  using NamedTensors = std::vector<std::pair<std::string, torch::Tensor>>;

  Adam() = default;
  Adam(NamedTensors params, AdamOptions options);

  void zero_grad();
  void step();

  const AdamOptions& options() const { return options_; }
  const NamedTensors& params() const { return params_; }

  // moments as "<name>.m", "<name>.v" and per-parameter step counts
  NamedTensors state() const;
  void load_state(const NamedTensors& state);

 private:
  NamedTensors params_;
  std::vector<torch::Tensor> m_;
  std::vector<torch::Tensor> v_;
  std::vector<int64_t> steps_;
  AdamOptions options_;
};

Adam::NamedTensors named_parameters_of(const torch::nn::Module& module, const std::string& prefix = "");

}  // namespace balagan

#endif  // BALAGAN_ADAM_HPP
