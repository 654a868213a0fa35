#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "holdstab/core/cycle.hpp"

namespace holdstab {

/// How a release directory tree maps onto GraspCycle. Every schema field is
/// looked up through a list of candidate key names; the first present wins.
/// Keys that match nothing are preserved verbatim in GraspCycle::raw.
struct IngestMapping {
    std::vector<std::string> metadata_files{"meta.json", "metadata.json", "info.json", "labels.json"};
    std::map<std::string, std::vector<std::string>> field_aliases{
        {"cycle_id", {"cycle_id", "id", "trial_id", "sample_id"}},
        {"object_id", {"object_id", "object", "object_name", "obj"}},
        {"grasp_point_id", {"grasp_point_id", "grasp_point", "grasp_location", "grasp_id"}},
        {"grip_force_n", {"grip_force_n", "gripper_force", "grip_force", "force"}},
        {"pose_id", {"pose_id", "pose", "holding_pose", "pose_index"}},
        {"label.grasp", {"labels.grasp", "label_grasp", "grasp_label", "grasp"}},
        {"label.pose", {"labels.pose", "label_pose", "pose_label"}},
        {"label.shake", {"labels.shake", "label_shake", "shake_label", "stability_label", "shaking"}},
        {"label.retract", {"labels.retract", "label_retract", "retract_label", "release_label"}},
        {"phase_boundaries", {"phase_boundaries", "phases", "phase_times"}},
    };
    std::map<std::string, std::vector<std::string>> stream_files{
        {"tactile", {"tactile", "gelsight"}},
        {"rgb", {"rgb", "camera", "image"}},
        {"wrench", {"wrench", "ft", "force_torque"}},
        {"pre_contact", {"pre_contact", "gelsight_pre_contact", "tactile_pre_contact"}},
    };
    /// Release pose ids are 0-based when true.
    bool zero_based_pose = false;

    static IngestMapping from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct IngestReport {
    std::size_t cycles = 0;
    std::size_t with_streams = 0;
    std::vector<std::string> skipped;  // "<dir>: <reason>"
};

/// Walks `source` recursively; every directory holding one of the metadata
/// files becomes a cycle. Stream arrays use the .npy naming of this project
/// (`<name>.npy` + `<name>_t.npy`) under any of the mapped names.
Dataset ingest_release(const std::filesystem::path& source, const IngestMapping& mapping,
                       IngestReport* report = nullptr);

}  // namespace holdstab
