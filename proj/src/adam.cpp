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

#include "balagan/adam.hpp"

#include <cmath>
#include <unordered_map>

#include "balagan/error.hpp"

namespace balagan {

Adam::Adam(NamedTensors params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& [name, p] : params_) {
    m_.push_back(torch::zeros_like(p).detach());
    v_.push_back(torch::zeros_like(p).detach());
  }
  steps_.assign(params_.size(), 0);
}

void Adam::zero_grad() {
  for (auto& [name, p] : params_) p.mutable_grad().reset();
}

void Adam::step() {
  torch::NoGradGuard no_grad;
  for (size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i].second;
    const auto& g = p.grad();
    if (!g.defined()) continue;
    const int64_t t = ++steps_[i];
    m_[i].mul_(options_.beta1).add_(g, 1.0 - options_.beta1);
    v_[i].mul_(options_.beta2).addcmul_(g, g, 1.0 - options_.beta2);
    const double bias1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t));
    const double bias2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t));
    auto denom = (v_[i] / bias2).sqrt_().add_(options_.eps);
    p.addcdiv_(m_[i], denom, -options_.lr / bias1);
  }
}

Adam::NamedTensors Adam::state() const {
  NamedTensors out;
  out.reserve(params_.size() * 3);
  for (size_t i = 0; i < params_.size(); ++i) {
    const auto& name = params_[i].first;
    out.emplace_back(name + ".m", m_[i]);
    out.emplace_back(name + ".v", v_[i]);
    out.emplace_back(name + ".step", torch::tensor(steps_[i], torch::kInt64));
  }
  return out;
}

void Adam::load_state(const NamedTensors& state) {
  std::unordered_map<std::string, const torch::Tensor*> by_name;
  for (const auto& [name, t] : state) by_name.emplace(name, &t);
  auto fetch = [&](const std::string& name) -> const torch::Tensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw Error(ErrorKind::kFormatError, "optimizer state lacks " + name);
    return *it->second;
  };
  torch::NoGradGuard no_grad;
  for (size_t i = 0; i < params_.size(); ++i) {
    const auto& name = params_[i].first;
    const auto& m = fetch(name + ".m");
    const auto& v = fetch(name + ".v");
    if (m.sizes() != m_[i].sizes() || v.sizes() != v_[i].sizes()) {
      throw Error(ErrorKind::kFormatError, "optimizer state shape mismatch for " + name);
    }
    m_[i].copy_(m);
    v_[i].copy_(v);
    steps_[i] = fetch(name + ".step").item<int64_t>();
  }
}

Adam::NamedTensors named_parameters_of(const torch::nn::Module& module, const std::string& prefix) {
  Adam::NamedTensors out;
  for (const auto& item : module.named_parameters(true)) {
    out.emplace_back(prefix + item.key(), item.value());
  }
  return out;
}

}  // namespace balagan
