// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary tensor container. Layout, all little-endian:
//   magic "GEOD" | version u32 | tensor count u32 |
//   per tensor: name length u16, UTF-8 name, ndim u8, dims u32 each,
//               values as f32.
// The same container is used for checkpoints and for dataset sidecar
// files (frame grids, point clouds).

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/param_store.hpp"
#include "core/tensor.hpp"

namespace geode {

inline constexpr uint32_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<float> values;
};

void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensors(const std::string& path);

// Whole-store checkpoints. Load either replaces the store contents or,
// with a prefix filter, only the matching names.
void save_checkpoint(const std::string& path, const ParamStore& store);
void load_checkpoint(const std::string& path, ParamStore& store);

// FNV-1a over the serialized bytes of every name matching the prefix.
// Used by the freeze-invariant checks.
uint64_t hash_namespace(const ParamStore& store, const std::string& prefix);

NamedTensor to_named(const std::string& name, const Tensor& t);
Tensor from_named(const NamedTensor& nt);

}  // namespace geode
