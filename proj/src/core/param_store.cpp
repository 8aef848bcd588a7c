// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "core/param_store.hpp"

#include "core/error.hpp"

namespace geode {

Tensor& ParamStore::create(const std::string& name, Tensor t) {
    if (entries_.count(name)) throw ContractError("parameter already exists: " + name);
    t.set_requires_grad(true);
    auto [it, ok] = entries_.emplace(name, std::move(t));
    trainable_[name] = true;
    return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractError("unknown parameter: " + name);
    return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractError("unknown parameter: " + name);
    return it->second;
}

void ParamStore::set_trainable(const std::string& name, bool trainable) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractError("unknown parameter: " + name);
    trainable_[name] = trainable;
    it->second.set_requires_grad(trainable);
}

void ParamStore::set_trainable_prefix(const std::string& prefix, bool trainable) {
    for (auto& [name, t] : entries_) {
        if (name.rfind(prefix, 0) == 0) {
            trainable_[name] = trainable;
            t.set_requires_grad(trainable);
        }
    }
}

void ParamStore::apply_freeze_mask(const std::vector<std::string>& trainable_prefixes) {
    for (auto& [name, t] : entries_) {
        bool on = false;
        for (const auto& p : trainable_prefixes)
            if (name.rfind(p, 0) == 0) on = true;
        trainable_[name] = on;
        t.set_requires_grad(on);
    }
}

bool ParamStore::trainable(const std::string& name) const {
    auto it = trainable_.find(name);
    if (it == trainable_.end()) throw ContractError("unknown parameter: " + name);
    return it->second;
}

void ParamStore::zero_grads() {
    for (auto& [name, t] : entries_) {
        auto& g = t.grad();
        std::fill(g.begin(), g.end(), 0.0);
    }
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, t] : entries_) out.push_back(name);
    return out;
}

std::vector<std::string> ParamStore::names_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [name, t] : entries_)
        if (name.rfind(prefix, 0) == 0) out.push_back(name);
    return out;
}

void ParamStore::adopt(ParamStore&& other) {
    for (auto& [name, t] : other.entries_) {
        if (entries_.count(name)) throw ContractError("duplicate parameter on adopt: " + name);
        entries_.emplace(name, std::move(t));
        trainable_[name] = other.trainable_.at(name);
    }
    other.entries_.clear();
    other.trainable_.clear();
}

}  // namespace geode
