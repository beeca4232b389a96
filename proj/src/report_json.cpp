// SPDX-License-Identifier: Apache-2.0
#include "ghostedit/report_json.hpp"

#include "ghostedit/errors.hpp"

namespace ghostedit::report {

ordered_json to_json(const layerfs::EntrySummary& summary) {
    ordered_json doc;
    doc["kind"] = tar::kind_name(summary.kind);
    doc["size"] = summary.size;
    doc["sha256"] = summary.content_sha256;
    doc["mtime"] = summary.mtime;
    return doc;
}

ordered_json to_json(const layerfs::EntryDiff& diff) {
    ordered_json doc;
    doc["path"] = diff.path;
    doc["change"] = layerfs::change_name(diff.change);
    doc["before"] = diff.before ? to_json(*diff.before) : ordered_json(nullptr);
    doc["after"] = diff.after ? to_json(*diff.after) : ordered_json(nullptr);
    return doc;
}

ordered_json to_json(const audit::Finding& finding) {
    ordered_json doc;
    doc["code"] = finding.code;
    doc["severity"] = audit::severity_name(finding.severity);
    doc["layer_index"] =
        finding.layer_index ? ordered_json(*finding.layer_index) : ordered_json(nullptr);
    doc["path"] = finding.path ? ordered_json(*finding.path) : ordered_json(nullptr);
    doc["evidence"] = finding.evidence;
    return doc;
}

ordered_json to_json(const audit::IntegrityReport& report) {
    ordered_json doc;
    doc["kind"] = "integrity";
    doc["image_id"] = report.image_id.prefixed();
    doc["findings"] = ordered_json::array();
    for (const auto& finding : report.findings)
        doc["findings"].push_back(to_json(finding));
    doc["verdict"] = audit::verdict_name(report.verdict);
    return doc;
}

ordered_json to_json(const audit::TamperReport& report) {
    ordered_json doc;
    doc["kind"] = "tamper";
    doc["reference_image_id"] = report.reference_image_id.prefixed();
    doc["suspect_image_id"] = report.suspect_image_id.prefixed();
    doc["per_layer"] = ordered_json::array();
    for (const auto& [layer_index, diffs] : report.per_layer) {
        ordered_json layer;
        layer["layer_index"] = layer_index;
        layer["entries"] = ordered_json::array();
        for (const auto& diff : diffs)
            layer["entries"].push_back(to_json(diff));
        doc["per_layer"].push_back(std::move(layer));
    }
    doc["config_drift"] = ordered_json::array();
    for (const auto& drift : report.config_drift) {
        ordered_json item;
        item["field"] = drift.field;
        item["before"] = drift.before;
        item["after"] = drift.after;
        doc["config_drift"].push_back(std::move(item));
    }
    doc["findings"] = ordered_json::array();
    for (const auto& finding : report.findings)
        doc["findings"].push_back(to_json(finding));
    doc["verdict"] = audit::verdict_name(audit::verdict_for(report.findings));
    return doc;
}

ordered_json to_json(const audit::TrustRecord& record) {
    ordered_json doc;
    doc["kind"] = "trust-record";
    doc["name_tag"] = record.name_tag;
    doc["image_id"] = record.image_id.prefixed();
    doc["recorded_at"] = record.recorded_at;
    return doc;
}

ordered_json to_json(const engine::EditReport& report) {
    ordered_json doc;
    doc["kind"] = "edit";
    doc["resolved_layer"] = report.resolved_layer;
    doc["old_diff_id"] = report.old_diff_id.prefixed();
    doc["new_diff_id"] = report.new_diff_id.prefixed();
    doc["old_image_id"] = report.old_image_id.prefixed();
    doc["new_image_id"] = report.new_image_id.prefixed();
    doc["actions_applied"] = ordered_json::array();
    for (const auto& record : report.actions_applied) {
        ordered_json item;
        item["action"] = record.action;
        item["path"] = record.path;
        doc["actions_applied"].push_back(std::move(item));
    }
    doc["bytes_delta"] = report.bytes_delta;
    doc["entrypoint"] = report.entrypoint_after;
    doc["command"] = report.command_after;
    return doc;
}

ordered_json inspect_summary(const archive::ImageArchive& image,
                             const std::string& last_touch_prefix) {
    ordered_json doc;
    doc["kind"] = "inspection";
    doc["image_id"] = archive::compute_image_id(image.config).prefixed();
    doc["repo_tags"] = image.manifest.repo_tags;
    doc["created"] = image.config.created;
    doc["entrypoint"] = image.config.runtime.entrypoint;
    doc["command"] = image.config.runtime.command;
    doc["env"] = image.config.runtime.env;

    std::optional<int> last_touch;
    if (!last_touch_prefix.empty())
        last_touch = layerfs::find_last_layer_touching(image.layers, last_touch_prefix);

    // Map each layer to the non-empty history entry it came from.
    std::vector<const archive::HistoryEntry*> layer_history(image.layers.size(), nullptr);
    std::size_t layer = 0;
    for (const auto& entry : image.config.history) {
        if (entry.empty_layer)
            continue;
        if (layer < layer_history.size())
            layer_history[layer] = &entry;
        ++layer;
    }

    doc["layers"] = ordered_json::array();
    for (std::size_t i = 0; i < image.layers.size(); ++i) {
        ordered_json item;
        item["index"] = i;
        item["diff_id"] = image.config.diff_ids[i].prefixed();
        item["size"] = layerfs::write_layer(image.layers[i]).size();
        item["entries"] = image.layers[i].entries.size();
        item["created_by"] =
            layer_history[i] ? ordered_json(layer_history[i]->created_by) : ordered_json(nullptr);
        if (last_touch && *last_touch == static_cast<int>(i))
            item["last_touch"] = last_touch_prefix;
        doc["layers"].push_back(std::move(item));
    }
    return doc;
}

ordered_json envelope(const std::string& command, const std::string& generated_at,
                      ordered_json payload) {
    ordered_json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["tool_version"] = kToolVersion;
    doc["command"] = command;
    doc["generated_at"] = generated_at;
    doc["payload"] = std::move(payload);
    return doc;
}

std::string render(const ordered_json& doc) { return doc.dump(2) + "\n"; }

} // namespace ghostedit::report
