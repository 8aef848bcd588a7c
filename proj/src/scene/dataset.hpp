// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Dataset emission and loading. Samples go to JSONL; frame grids and
// point clouds go to binary sidecar files in the tensor container
// format, shared per scene. The manifest records per-task counts and
// the normalization scales used by the regression heads.

#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "scene/qa.hpp"
#include "scene/scene.hpp"

namespace geode {

struct SceneAssets {
    std::vector<Frame> frames;
    PointCloud cloud;
};

struct Dataset {
    std::vector<QASample> samples;
    // keyed by sidecar file name (relative to the dataset directory)
    std::map<std::string, SceneAssets> assets;
    nlohmann::json manifest;

    const SceneAssets& assets_for(const QASample& qa) const;
};

struct DataGenConfig {
    uint64_t seed = 0;
    int scenes = 50;
    int samples_per_scene = 8;
    int n_frames = 16;
    SceneConfig scene;
};

// Regression-target scales. Derived from the generator bounds so that
// every normalized target lies in roughly [-1, 1].
struct NormStats {
    double abs_dist = 1, obj_count = 1, obj_size = 1, room_size = 1;
    double box_center_xy = 1, box_center_z = 1, box_size = 1, box_yaw = 1;

    double scalar_scale(TaskKind task) const;
    nlohmann::json to_json() const;
    static NormStats from_json(const nlohmann::json& j);
    static NormStats from_config(const SceneConfig& cfg);
};

Dataset generate_dataset(const DataGenConfig& cfg);

// Writes samples.jsonl + sidecars + manifest.json under dir; returns the
// manifest.
nlohmann::json emit_dataset(const Dataset& ds, const std::string& dir);

Dataset load_dataset(const std::string& dir);

nlohmann::json sample_to_json(const QASample& qa);
QASample sample_from_json(const nlohmann::json& j);

}  // namespace geode
