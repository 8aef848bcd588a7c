// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace geode {

// Named parameter tensors with per-name trainable flags. Freezing a name
// clears requires_grad on its tensor, so frozen parameters never receive
// gradient and their values cannot change through the optimizer.
class ParamStore {
public:
    Tensor& create(const std::string& name, Tensor t);
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    bool contains(const std::string& name) const { return entries_.count(name) > 0; }

    void set_trainable(const std::string& name, bool trainable);
    // Applies to every name starting with the prefix.
    void set_trainable_prefix(const std::string& prefix, bool trainable);
    // Freezes everything, then re-enables the given prefixes.
    void apply_freeze_mask(const std::vector<std::string>& trainable_prefixes);
    bool trainable(const std::string& name) const;

    void zero_grads();
    std::vector<std::string> names() const;
    std::vector<std::string> names_with_prefix(const std::string& prefix) const;
    size_t size() const { return entries_.size(); }

    // Merges another store's entries; duplicate names are an error.
    void adopt(ParamStore&& other);

private:
    std::map<std::string, Tensor> entries_;  // ordered: deterministic iteration
    std::map<std::string, bool> trainable_;
};

}  // namespace geode
