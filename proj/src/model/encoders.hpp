// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Trainable encoders for the two input branches: a patch transformer
// over the semantic-depth rasters (F_2D) and a permutation-invariant
// attention-pooling encoder over the oracle point cloud (F_3D).

#pragma once

#include <vector>

#include "core/param_store.hpp"
#include "core/tensor.hpp"
#include "scene/scene.hpp"

namespace geode {

struct EncoderConfig {
    int d_model = 64;
    int d_3d = 64;
    int pool_tokens = 16;  // K
    int patch = 4;
    int grid = 16;
    int max_frames = 16;
    int max_objects = 10;
};

void init_encoder_params(ParamStore& store, const EncoderConfig& cfg, Rng& rng);

// F_2D: T x d_model with T = |frames| * (grid/patch)^2.
Tensor encode_2d(const ParamStore& store, const EncoderConfig& cfg,
                 const std::vector<Frame>& frames);

// F_3D: K x d_3d. Exactly permutation-invariant in the input points.
Tensor encode_3d(const ParamStore& store, const EncoderConfig& cfg, const PointCloud& cloud,
                 const std::vector<CameraPose>& poses);

}  // namespace geode
