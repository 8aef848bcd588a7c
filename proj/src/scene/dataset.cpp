// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "scene/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/checkpoint.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace geode {

namespace {

constexpr double kMaxObjectDim = 2.2;  // largest entry in the size ranges

std::string scene_file(const char* prefix, int scene_id) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%06d.geod", prefix, scene_id);
    return buf;
}

std::vector<NamedTensor> frames_to_tensors(const std::vector<Frame>& frames) {
    const int n = static_cast<int>(frames.size());
    const int g = frames.at(0).grid;
    NamedTensor ids{"grid_ids", {n, g, g}, {}};
    NamedTensor depth{"grid_depth", {n, g, g}, {}};
    NamedTensor poses{"poses", {n, 5}, {}};
    for (const Frame& f : frames) {
        for (int v : f.ids) ids.values.push_back(static_cast<float>(v));
        for (double v : f.depth) depth.values.push_back(static_cast<float>(v));
        poses.values.push_back(static_cast<float>(f.pose.position.x));
        poses.values.push_back(static_cast<float>(f.pose.position.y));
        poses.values.push_back(static_cast<float>(f.pose.position.z));
        poses.values.push_back(static_cast<float>(f.pose.yaw));
        poses.values.push_back(static_cast<float>(f.pose.pitch));
    }
    return {ids, depth, poses};
}

std::vector<Frame> frames_from_tensors(const std::vector<NamedTensor>& tensors) {
    const NamedTensor *ids = nullptr, *depth = nullptr, *poses = nullptr;
    for (const auto& t : tensors) {
        if (t.name == "grid_ids") ids = &t;
        if (t.name == "grid_depth") depth = &t;
        if (t.name == "poses") poses = &t;
    }
    if (!ids || !depth || !poses) throw IoError("frames sidecar missing tensors");
    const int n = ids->shape.at(0), g = ids->shape.at(1);
    std::vector<Frame> frames(n);
    for (int i = 0; i < n; ++i) {
        Frame& f = frames[i];
        f.grid = g;
        const size_t off = static_cast<size_t>(i) * g * g;
        for (int j = 0; j < g * g; ++j) {
            f.ids.push_back(static_cast<int>(ids->values[off + j]));
            f.depth.push_back(depth->values[off + j]);
        }
        const float* p = poses->values.data() + static_cast<size_t>(i) * 5;
        f.pose.position = {p[0], p[1], p[2]};
        f.pose.yaw = p[3];
        f.pose.pitch = p[4];
    }
    return frames;
}

std::vector<NamedTensor> cloud_to_tensors(const PointCloud& cloud) {
    NamedTensor pts{"points", {static_cast<int>(cloud.points.size()), 5}, {}};
    for (const ScenePoint& p : cloud.points) {
        pts.values.push_back(static_cast<float>(p.xyz.x));
        pts.values.push_back(static_cast<float>(p.xyz.y));
        pts.values.push_back(static_cast<float>(p.xyz.z));
        pts.values.push_back(static_cast<float>(p.object_id));
        pts.values.push_back(static_cast<float>(p.category));
    }
    return {pts};
}

PointCloud cloud_from_tensors(const std::vector<NamedTensor>& tensors) {
    const NamedTensor* pts = nullptr;
    for (const auto& t : tensors)
        if (t.name == "points") pts = &t;
    if (!pts) throw IoError("cloud sidecar missing points tensor");
    PointCloud cloud;
    const int n = pts->shape.at(0);
    for (int i = 0; i < n; ++i) {
        const float* p = pts->values.data() + static_cast<size_t>(i) * 5;
        cloud.points.push_back({{p[0], p[1], p[2]}, static_cast<int>(p[3]),
                                static_cast<int>(p[4])});
    }
    return cloud;
}

}  // namespace

const SceneAssets& Dataset::assets_for(const QASample& qa) const {
    auto it = assets.find(qa.frames_file);
    if (it == assets.end()) throw IoError("missing scene assets: " + qa.frames_file);
    return it->second;
}

double NormStats::scalar_scale(TaskKind task) const {
    switch (task) {
        case TaskKind::ObjCount: return obj_count;
        case TaskKind::AbsDist: return abs_dist;
        case TaskKind::ObjSize: return obj_size;
        case TaskKind::RoomSize: return room_size;
        default: throw ContractError(std::string("no scalar scale for task ") + task_name(task));
    }
}

json NormStats::to_json() const {
    return json{{"abs_dist", abs_dist},
                {"obj_count", obj_count},
                {"obj_size", obj_size},
                {"room_size", room_size},
                {"box_center_xy", box_center_xy},
                {"box_center_z", box_center_z},
                {"box_size", box_size},
                {"box_yaw", box_yaw}};
}

NormStats NormStats::from_json(const json& j) {
    NormStats s;
    s.abs_dist = j.at("abs_dist");
    s.obj_count = j.at("obj_count");
    s.obj_size = j.at("obj_size");
    s.room_size = j.at("room_size");
    s.box_center_xy = j.at("box_center_xy");
    s.box_center_z = j.at("box_center_z");
    s.box_size = j.at("box_size");
    s.box_yaw = j.at("box_yaw");
    return s;
}

NormStats NormStats::from_config(const SceneConfig& cfg) {
    NormStats s;
    s.abs_dist = std::sqrt(2 * cfg.max_room * cfg.max_room + cfg.max_room_h * cfg.max_room_h);
    s.obj_count = cfg.max_objects;
    s.obj_size = kMaxObjectDim;
    s.room_size = cfg.max_room * cfg.max_room;
    s.box_center_xy = cfg.max_room;
    s.box_center_z = cfg.max_room_h;
    s.box_size = kMaxObjectDim;
    s.box_yaw = M_PI;
    return s;
}

Dataset generate_dataset(const DataGenConfig& cfg) {
    Dataset ds;
    std::map<std::string, int> counts;
    for (int s = 0; s < cfg.scenes; ++s) {
        const uint64_t scene_seed = cfg.seed + static_cast<uint64_t>(s);
        Scene scene;
        bool ok = false;
        for (uint64_t retry = 0; retry < 20 && !ok; ++retry) {
            try {
                scene = generate_scene(scene_seed + retry * 0x10000001ull, cfg.scene);
                ok = true;
            } catch (const NumericError&) {
            }
        }
        if (!ok) throw NumericError("scene generation failed repeatedly");
        scene.id = static_cast<int>(scene_seed);
        auto frames = render_frames(scene, scene_seed, cfg.n_frames, cfg.scene);
        auto cloud = sample_pointcloud(scene, frames, cfg.scene);
        const std::string ff = scene_file("frames", scene.id);
        const std::string cf = scene_file("cloud", scene.id);
        ds.assets[ff] = {frames, cloud};

        Rng rng(scene_seed ^ 0xabcdef12345ull);
        int made = 0;
        int attempts = 0;
        int task_cursor = rng.uniform_int(0, kNumTaskKinds - 1);
        while (made < cfg.samples_per_scene && attempts < cfg.samples_per_scene * 4) {
            const TaskKind task = static_cast<TaskKind>(task_cursor % kNumTaskKinds);
            ++task_cursor;
            ++attempts;
            try {
                QASample qa =
                    make_qa(scene, frames, task, scene_seed * 1000 + static_cast<uint64_t>(attempts));
                qa.frames_file = ff;
                qa.cloud_file = cf;
                ds.samples.push_back(std::move(qa));
                counts[task_name(task)]++;
                ++made;
            } catch (const ContractError&) {
                // task unsupported by this scene; try the next kind
            }
        }
    }
    json manifest;
    manifest["total"] = ds.samples.size();
    manifest["counts"] = counts;
    manifest["norm"] = NormStats::from_config(cfg.scene).to_json();
    manifest["n_frames"] = cfg.n_frames;
    manifest["grid"] = cfg.scene.grid;
    manifest["scenes"] = cfg.scenes;
    manifest["seed"] = cfg.seed;
    ds.manifest = manifest;
    return ds;
}

json sample_to_json(const QASample& qa) {
    json j;
    j["scene_id"] = qa.scene_id;
    j["task"] = task_name(qa.task);
    j["question"] = qa.question;
    j["answer_kind"] = answer_kind_name(qa.answer_kind);
    j["choices"] = qa.choices.empty() ? json(nullptr) : json(qa.choices);
    j["rationale"] = qa.rationale;
    j["target_scalar"] = qa.target_scalar ? json(*qa.target_scalar) : json(nullptr);
    if (qa.target_box) {
        j["target_box"] = std::vector<double>(qa.target_box->begin(), qa.target_box->end());
    } else {
        j["target_box"] = nullptr;
    }
    j["answer_text"] = qa.answer_text;
    j["frames_file"] = qa.frames_file;
    j["cloud_file"] = qa.cloud_file;
    return j;
}

QASample sample_from_json(const json& j) {
    QASample qa;
    qa.scene_id = j.at("scene_id");
    qa.task = task_from_name(j.at("task"));
    qa.question = j.at("question");
    qa.answer_kind = answer_kind_from_name(j.at("answer_kind"));
    if (!j.at("choices").is_null()) qa.choices = j.at("choices").get<std::vector<std::string>>();
    qa.rationale = j.at("rationale");
    if (!j.at("target_scalar").is_null()) qa.target_scalar = j.at("target_scalar").get<double>();
    if (!j.at("target_box").is_null()) {
        auto v = j.at("target_box").get<std::vector<double>>();
        if (v.size() != 7) throw IoError("target_box must have 7 components");
        std::array<double, 7> box;
        std::copy(v.begin(), v.end(), box.begin());
        qa.target_box = box;
    }
    qa.answer_text = j.at("answer_text");
    qa.frames_file = j.at("frames_file");
    qa.cloud_file = j.at("cloud_file");
    return qa;
}

json emit_dataset(const Dataset& ds, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path root(dir);
    {
        std::ofstream os(root / "samples.jsonl");
        if (!os) throw IoError("cannot write samples.jsonl in " + dir);
        for (const QASample& qa : ds.samples) os << sample_to_json(qa).dump() << "\n";
    }
    for (const auto& [ff, assets] : ds.assets) {
        save_tensors((root / ff).string(), frames_to_tensors(assets.frames));
        std::string cf = ff;
        const auto pos = cf.find("frames_");
        cf.replace(pos, 7, "cloud_");
        save_tensors((root / cf).string(), cloud_to_tensors(assets.cloud));
    }
    {
        std::ofstream os(root / "manifest.json");
        if (!os) throw IoError("cannot write manifest.json in " + dir);
        os << ds.manifest.dump(2) << "\n";
    }
    return ds.manifest;
}

Dataset load_dataset(const std::string& dir) {
    const fs::path root(dir);
    Dataset ds;
    {
        std::ifstream is(root / "manifest.json");
        if (!is) throw IoError("cannot read manifest.json in " + dir);
        is >> ds.manifest;
    }
    {
        std::ifstream is(root / "samples.jsonl");
        if (!is) throw IoError("cannot read samples.jsonl in " + dir);
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            ds.samples.push_back(sample_from_json(json::parse(line)));
        }
    }
    for (const QASample& qa : ds.samples) {
        if (ds.assets.count(qa.frames_file)) continue;
        SceneAssets assets;
        assets.frames = frames_from_tensors(load_tensors((root / qa.frames_file).string()));
        assets.cloud = cloud_from_tensors(load_tensors((root / qa.cloud_file).string()));
        ds.assets[qa.frames_file] = std::move(assets);
    }
    return ds;
}

}  // namespace geode
