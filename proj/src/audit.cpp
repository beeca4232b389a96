// SPDX-License-Identifier: Apache-2.0
#include "ghostedit/audit.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ghostedit/errors.hpp"
#include "ghostedit/time.hpp"

namespace ghostedit::audit {

using json = nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i)
            out += ", ";
        out += values[i];
    }
    return out.empty() ? "(empty)" : out;
}

std::string digest_list(const std::vector<Digest>& digests) {
    std::vector<std::string> hex;
    hex.reserve(digests.size());
    for (const auto& d : digests)
        hex.push_back(d.hex.substr(0, 12));
    return join(hex);
}

std::string history_summary(const std::vector<archive::HistoryEntry>& history) {
    std::ostringstream out;
    out << history.size() << " entries (" <<
        std::count_if(history.begin(), history.end(),
                      [](const auto& h) { return !h.empty_layer; })
        << " non-empty)";
    return out.str();
}

void drift_if_different(std::vector<ConfigDrift>& drift, const std::string& field,
                        const std::string& before, const std::string& after) {
    if (before != after)
        drift.push_back({field, before, after});
}

Finding finding_for_diff(int layer_index, const layerfs::EntryDiff& diff) {
    Finding finding;
    finding.layer_index = layer_index;
    finding.path = diff.path;
    switch (diff.change) {
    case layerfs::ChangeKind::Added:
        finding.code = "ENTRY_ADDED";
        finding.severity = Severity::Warn;
        finding.evidence = "entry present only in suspect (sha256 " +
                           (diff.after ? diff.after->content_sha256 : std::string("?")) + ")";
        break;
    case layerfs::ChangeKind::Removed:
        finding.code = "ENTRY_REMOVED";
        finding.severity = Severity::Warn;
        finding.evidence = "entry present only in reference (sha256 " +
                           (diff.before ? diff.before->content_sha256 : std::string("?")) + ")";
        break;
    case layerfs::ChangeKind::ContentModified:
        finding.code = "CONTENT_DRIFT";
        finding.severity = Severity::Warn;
        finding.evidence = "content sha256 " +
                           (diff.before ? diff.before->content_sha256 : std::string("?")) +
                           " -> " + (diff.after ? diff.after->content_sha256 : std::string("?"));
        break;
    case layerfs::ChangeKind::TypeChanged:
        finding.code = "TYPE_TRANSITION";
        finding.severity = Severity::Warn;
        finding.evidence =
            std::string(tar::kind_name(diff.before ? diff.before->kind
                                                   : tar::EntryKind::Regular)) +
            " -> " + tar::kind_name(diff.after ? diff.after->kind : tar::EntryKind::Regular);
        break;
    case layerfs::ChangeKind::MetaChanged:
        // Metadata-only drift stays in the per-layer diff listing.
        finding.code.clear();
        break;
    }
    return finding;
}

json record_to_json(const TrustRecord& record) {
    json doc;
    doc["name_tag"] = record.name_tag;
    doc["image_id"] = record.image_id.prefixed();
    doc["recorded_at"] = record.recorded_at;
    return doc;
}

void write_store(const std::filesystem::path& store_path,
                 const std::vector<TrustRecord>& records) {
    std::filesystem::path tmp = store_path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            raise(Errc::StoreUnwritable, "cannot open '" + tmp.string() + "' for writing");
        for (const auto& record : records)
            out << record_to_json(record).dump() << "\n";
        out.flush();
        if (!out)
            raise(Errc::StoreUnwritable, "short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, store_path, ec);
    if (ec)
        raise(Errc::StoreUnwritable,
              "cannot rename '" + tmp.string() + "' into place: " + ec.message());
}

} // namespace

const char* severity_name(Severity severity) {
    switch (severity) {
    case Severity::Info: return "info";
    case Severity::Warn: return "warn";
    case Severity::Critical: return "critical";
    }
    return "?";
}

const char* verdict_name(Verdict verdict) {
    switch (verdict) {
    case Verdict::Clean: return "clean";
    case Verdict::Suspicious: return "suspicious";
    case Verdict::Tampered: return "tampered";
    }
    return "?";
}

Verdict verdict_for(const std::vector<Finding>& findings) {
    bool warn = false;
    for (const auto& finding : findings) {
        if (finding.severity == Severity::Critical)
            return Verdict::Tampered;
        warn = warn || finding.severity == Severity::Warn;
    }
    return warn ? Verdict::Suspicious : Verdict::Clean;
}

IntegrityReport verify_integrity(const ImageArchive& image) {
    IntegrityReport report;
    report.image_id = archive::compute_image_id(image.config);

    std::vector<Digest> actual = archive::compute_all_diff_ids(image.layers);
    std::size_t checked = std::min(actual.size(), image.config.diff_ids.size());
    for (std::size_t i = 0; i < checked; ++i) {
        if (actual[i] != image.config.diff_ids[i]) {
            Finding finding;
            finding.code = "DIFFID_MISMATCH";
            finding.severity = Severity::Critical;
            finding.layer_index = static_cast<int>(i);
            finding.evidence = "config diff_id " + image.config.diff_ids[i].hex +
                               " vs recomputed " + actual[i].hex;
            report.findings.push_back(std::move(finding));
        }
    }
    if (actual.size() != image.config.diff_ids.size()) {
        Finding finding;
        finding.code = "DIFFID_MISMATCH";
        finding.severity = Severity::Critical;
        finding.evidence = "config lists " + std::to_string(image.config.diff_ids.size()) +
                           " diff_ids but the archive has " + std::to_string(actual.size()) +
                           " layers";
        report.findings.push_back(std::move(finding));
    }

    auto non_empty = static_cast<std::size_t>(
        std::count_if(image.config.history.begin(), image.config.history.end(),
                      [](const auto& h) { return !h.empty_layer; }));
    if (non_empty != image.layers.size()) {
        Finding finding;
        finding.code = "HISTORY_COUNT_MISMATCH";
        finding.severity = Severity::Critical;
        finding.evidence = "history has " + std::to_string(non_empty) +
                           " non-empty entries for " + std::to_string(image.layers.size()) +
                           " layers";
        report.findings.push_back(std::move(finding));
    }

    Finding info;
    info.code = "IMAGE_ID";
    info.severity = Severity::Info;
    info.evidence = report.image_id.prefixed();
    report.findings.push_back(std::move(info));

    report.verdict = verdict_for(report.findings);
    return report;
}

TamperReport diff_images(const ImageArchive& reference, const ImageArchive& suspect) {
    TamperReport report;
    report.reference_image_id = archive::compute_image_id(reference.config);
    report.suspect_image_id = archive::compute_image_id(suspect.config);

    if (reference.layers.size() != suspect.layers.size()) {
        Finding finding;
        finding.code = "DIFFID_MISMATCH";
        finding.severity = Severity::Critical;
        finding.evidence = "layer count differs: reference " +
                           std::to_string(reference.layers.size()) + ", suspect " +
                           std::to_string(suspect.layers.size());
        report.findings.push_back(std::move(finding));
    }

    // Positional alignment: a ghost edit changes the edited layer's
    // digest, so digest-based alignment would misreport an insertion.
    std::size_t common = std::min(reference.layers.size(), suspect.layers.size());
    for (std::size_t i = 0; i < common; ++i) {
        std::vector<layerfs::EntryDiff> diffs =
            layerfs::layer_diff(reference.layers[i], suspect.layers[i]);
        if (diffs.empty())
            continue;
        for (const auto& diff : diffs) {
            Finding finding = finding_for_diff(static_cast<int>(i), diff);
            if (!finding.code.empty())
                report.findings.push_back(std::move(finding));
        }
        report.per_layer.emplace_back(static_cast<int>(i), std::move(diffs));
    }

    const auto& ref_cfg = reference.config;
    const auto& sus_cfg = suspect.config;
    drift_if_different(report.config_drift, "created", ref_cfg.created, sus_cfg.created);
    if (ref_cfg.history != sus_cfg.history) {
        std::string before = history_summary(ref_cfg.history);
        std::string after = history_summary(sus_cfg.history);
        if (before == after)
            after += " (entry text differs)";
        report.config_drift.push_back({"history", before, after});
    }
    drift_if_different(report.config_drift, "entrypoint", join(ref_cfg.runtime.entrypoint),
                       join(sus_cfg.runtime.entrypoint));
    drift_if_different(report.config_drift, "command", join(ref_cfg.runtime.command),
                       join(sus_cfg.runtime.command));
    drift_if_different(report.config_drift, "env", join(ref_cfg.runtime.env),
                       join(sus_cfg.runtime.env));
    drift_if_different(report.config_drift, "diff_ids", digest_list(ref_cfg.diff_ids),
                       digest_list(sus_cfg.diff_ids));

    if (ref_cfg.runtime.entrypoint != sus_cfg.runtime.entrypoint ||
        ref_cfg.runtime.command != sus_cfg.runtime.command) {
        bool entrypoint_changed = ref_cfg.runtime.entrypoint != sus_cfg.runtime.entrypoint;
        const auto& before = entrypoint_changed ? ref_cfg.runtime.entrypoint
                                                : ref_cfg.runtime.command;
        const auto& after = entrypoint_changed ? sus_cfg.runtime.entrypoint
                                               : sus_cfg.runtime.command;
        Finding finding;
        finding.code = "ENTRYPOINT_DRIFT";
        finding.severity = Severity::Critical;
        finding.evidence = std::string(entrypoint_changed ? "entrypoint" : "command") + ": [" +
                           join(before) + "] -> [" + join(after) + "]";
        report.findings.push_back(std::move(finding));
    }

    return report;
}

std::vector<Finding> detect_mtime_anomalies(const ImageArchive& image,
                                            std::int64_t tolerance_seconds) {
    if (tolerance_seconds < 0)
        raise(Errc::PreconditionViolated, "mtime tolerance must be non-negative");
    std::optional<std::int64_t> created = parse_rfc3339(image.config.created);
    if (!created)
        raise(Errc::ConfigUnparseable,
              "created timestamp '" + image.config.created + "' is not RFC 3339");

    std::vector<Finding> findings;
    for (std::size_t i = 0; i < image.layers.size(); ++i) {
        for (const auto& entry : image.layers[i].entries) {
            if (entry.mtime <= *created + tolerance_seconds)
                continue;
            Finding finding;
            finding.code = "MTIME_ANOMALY";
            finding.severity = Severity::Warn;
            finding.layer_index = static_cast<int>(i);
            finding.path = entry.path;
            finding.evidence = "entry mtime " + format_rfc3339(entry.mtime) +
                               " is after image created " + image.config.created + " + " +
                               std::to_string(tolerance_seconds) + "s";
            findings.push_back(std::move(finding));
        }
    }
    return findings;
}

std::vector<TrustRecord> read_trust_store(const std::filesystem::path& store_path) {
    std::vector<TrustRecord> records;
    std::ifstream in(store_path, std::ios::binary);
    if (!in)
        return records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        json doc = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (!doc.is_object() || !doc.contains("name_tag") || !doc.contains("image_id"))
            raise(Errc::ConfigUnparseable, "trust store line " + std::to_string(line_no) +
                                               " is not a record object");
        TrustRecord record;
        record.name_tag = doc["name_tag"].get<std::string>();
        record.image_id = Digest::parse(doc["image_id"].get<std::string>());
        record.recorded_at = doc.value("recorded_at", std::string{});
        records.push_back(std::move(record));
    }
    return records;
}

TrustRecord record_trust(const ImageArchive& image, const std::string& name_tag,
                         const std::filesystem::path& store_path,
                         std::optional<std::string> recorded_at) {
    TrustRecord record;
    record.name_tag = name_tag;
    record.image_id = archive::compute_image_id(image.config);
    record.recorded_at = recorded_at.value_or(format_rfc3339(wall_clock_seconds()));

    std::vector<TrustRecord> records = read_trust_store(store_path);
    auto it = std::find_if(records.begin(), records.end(),
                           [&](const TrustRecord& r) { return r.name_tag == name_tag; });
    if (it != records.end())
        *it = record;
    else
        records.push_back(record);
    write_store(store_path, records);
    return record;
}

std::optional<Finding> verify_trust(const ImageArchive& image, const std::string& name_tag,
                                    const std::filesystem::path& store_path) {
    std::vector<TrustRecord> records = read_trust_store(store_path);
    auto it = std::find_if(records.begin(), records.end(),
                           [&](const TrustRecord& r) { return r.name_tag == name_tag; });
    if (it == records.end()) {
        Error err(Errc::RecordNotFound, "no trust record for '" + name_tag + "'");
        err.path = name_tag;
        throw err;
    }

    Digest actual = archive::compute_image_id(image.config);
    if (actual == it->image_id)
        return std::nullopt;

    Finding finding;
    finding.code = "TRUST_DIGEST_MISMATCH";
    finding.severity = Severity::Critical;
    finding.evidence = "recorded " + it->image_id.prefixed() + " vs inspected " +
                       actual.prefixed();
    return finding;
}

} // namespace ghostedit::audit
