// SPDX-License-Identifier: Apache-2.0
#include "ghostedit/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ghostedit/archive.hpp"
#include "ghostedit/audit.hpp"
#include "ghostedit/engine.hpp"
#include "ghostedit/errors.hpp"
#include "ghostedit/fixtures.hpp"
#include "ghostedit/report_json.hpp"
#include "ghostedit/time.hpp"

namespace ghostedit::cli {

namespace fs = std::filesystem;
using report::ordered_json;

namespace {

constexpr const char* kMarkerPayload = "GH0STEDIT-MARKER\n";

struct CliFailure {
    int exit_code;
    std::string message;
};

int exit_code_for(const Error& error) {
    switch (error.code()) {
    case Errc::TargetNotFound:
    case Errc::IndexOutOfRange:
        return kExitTarget;
    case Errc::PreconditionViolated:
    case Errc::SpliceAmbiguous:
    case Errc::InvariantViolation:
        return kExitPrecondition;
    case Errc::RecordNotFound:
        return kExitMissingRecord;
    case Errc::SpecInvalid:
        return kExitUsage;
    default:
        return kExitParse;
    }
}

Bytes read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw CliFailure{kExitParse, "cannot read '" + path.string() + "'"};
    Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw CliFailure{kExitParse, "read failed for '" + path.string() + "'"};
    return bytes;
}

void write_file(const fs::path& path, const Bytes& bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw CliFailure{kExitParse, "cannot write '" + tmp.string() + "'"};
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out)
            throw CliFailure{kExitParse, "short write to '" + tmp.string() + "'"};
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        throw CliFailure{kExitParse,
                         "cannot rename '" + tmp.string() + "' into place: " + ec.message()};
}

archive::ImageArchive load_from_file(const fs::path& path) {
    Bytes bytes = read_file(path);
    return archive::load_archive(std::span(bytes));
}

std::string resolve_generated_at(const std::string& flag_value) {
    if (flag_value.empty())
        return format_rfc3339(wall_clock_seconds());
    if (!parse_rfc3339(flag_value))
        throw CliFailure{kExitUsage,
                         "--generated-at '" + flag_value + "' is not an RFC 3339 timestamp"};
    return flag_value;
}

std::pair<std::string, std::string> split_assignment(const std::string& value,
                                                     const char* flag) {
    auto eq = value.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= value.size())
        throw CliFailure{kExitUsage,
                         std::string(flag) + " expects ARCHIVE_PATH=LOCAL_FILE, got '" + value +
                             "'"};
    return {value.substr(0, eq), value.substr(eq + 1)};
}

std::string quote_list(const std::vector<std::string>& values) {
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i)
            out += ", ";
        out += "\"" + values[i] + "\"";
    }
    return out + "]";
}

std::string short_hex(const Digest& digest) { return digest.hex.substr(0, 12); }

void print_findings(std::ostream& out, const std::vector<audit::Finding>& findings) {
    for (const auto& finding : findings) {
        out << "  [" << audit::severity_name(finding.severity) << "] " << finding.code;
        if (finding.layer_index)
            out << " layer=" << *finding.layer_index;
        if (finding.path)
            out << " path=" << *finding.path;
        out << "  " << finding.evidence << "\n";
    }
}

void print_edit_report(std::ostream& out, const engine::EditReport& report) {
    out << "edited layer " << report.resolved_layer << "\n";
    out << "  old diff_id  sha256:" << report.old_diff_id.hex << "\n";
    out << "  new diff_id  sha256:" << report.new_diff_id.hex << "\n";
    out << "  old image id sha256:" << report.old_image_id.hex << "\n";
    out << "  new image id sha256:" << report.new_image_id.hex << "\n";
    out << "  bytes delta  " << (report.bytes_delta >= 0 ? "+" : "") << report.bytes_delta
        << "\n";
    for (const auto& action : report.actions_applied)
        out << "  action       " << action.action << " " << action.path << "\n";
    out << "  entrypoint   " << quote_list(report.entrypoint_after) << "\n";
    out << "  command      " << quote_list(report.command_after) << "\n";
}

struct InspectOptions {
    std::string archive_path;
    std::string last_touch_prefix = "usr/local/bin";
    bool json = false;
    std::string generated_at;
};

int cmd_inspect(const InspectOptions& options, std::ostream& out) {
    Bytes bytes = read_file(options.archive_path);
    archive::LayoutKind layout = archive::detect_layout(std::span(bytes));
    if (layout != archive::LayoutKind::LegacyDockerSave)
        throw CliFailure{kExitParse, std::string("layout unsupported for editing; detected: ") +
                                         archive::layout_name(layout)};
    archive::ImageArchive image = archive::load_archive(std::span(bytes));

    if (options.json) {
        ordered_json payload = report::inspect_summary(image, options.last_touch_prefix);
        out << report::render(report::envelope("inspect", resolve_generated_at(
                                                              options.generated_at),
                                               std::move(payload)));
        return kExitSuccess;
    }

    out << "image:      "
        << (image.manifest.repo_tags.empty() ? "(untagged)" : image.manifest.repo_tags.front())
        << "\n";
    out << "image id:   sha256:" << archive::compute_image_id(image.config).hex << "\n";
    out << "created:    " << image.config.created << "\n";
    out << "entrypoint: " << quote_list(image.config.runtime.entrypoint) << "\n";
    out << "command:    " << quote_list(image.config.runtime.command) << "\n";
    out << "\n";

    std::optional<int> last_touch;
    if (!options.last_touch_prefix.empty())
        last_touch = layerfs::find_last_layer_touching(image.layers, options.last_touch_prefix);

    std::vector<std::string> created_by(image.layers.size());
    std::size_t layer = 0;
    for (const auto& entry : image.config.history) {
        if (entry.empty_layer)
            continue;
        if (layer < created_by.size())
            created_by[layer] = entry.created_by;
        ++layer;
    }

    out << "layers:\n";
    for (std::size_t i = 0; i < image.layers.size(); ++i) {
        std::string command = created_by[i];
        if (command.size() > 48)
            command = command.substr(0, 45) + "...";
        out << "  " << std::setw(3) << i << "  " << short_hex(image.config.diff_ids[i]) << "  "
            << std::setw(8) << layerfs::write_layer(image.layers[i]).size() << "  " << command;
        if (last_touch && *last_touch == static_cast<int>(i))
            out << "  <- last touch: " << options.last_touch_prefix;
        out << "\n";
    }

    out << "\nhierarchy:\n";
    for (std::size_t i = 0; i < image.layers.size(); ++i) {
        std::optional<Digest> parent = archive::parent_of(image, static_cast<int>(i));
        out << "  " << std::string(2 * i, ' ') << short_hex(image.config.diff_ids[i]);
        if (parent)
            out << "  (parent " << short_hex(*parent) << ")";
        else
            out << "  (base layer)";
        out << "\n";
    }
    return kExitSuccess;
}

struct EditOptions {
    std::string archive_path;
    std::optional<int> target_layer;
    std::string target_prefix;
    std::vector<std::string> injects;
    std::vector<std::string> replaces;
    std::vector<std::string> removes;
    std::string prepend_entrypoint;
    std::string mtime = "stealth";
    std::string out_path;
    bool json = false;
    std::string generated_at;
};

engine::MtimePolicy parse_mtime_policy(const std::string& text) {
    if (text == "stealth")
        return engine::MtimePolicy::Stealth;
    if (text == "preserve")
        return engine::MtimePolicy::PreserveOriginal;
    if (text == "honest")
        return engine::MtimePolicy::Honest;
    throw CliFailure{kExitUsage, "--mtime must be stealth, preserve or honest"};
}

int cmd_edit(const EditOptions& options, std::ostream& out) {
    if (options.target_layer.has_value() == !options.target_prefix.empty())
        throw CliFailure{kExitUsage,
                         "exactly one of --target-layer or --target-prefix is required"};

    engine::MtimePolicy policy = parse_mtime_policy(options.mtime);
    engine::EditPlan plan;
    if (options.target_layer)
        plan.target = *options.target_layer;
    else
        plan.target = engine::AutoLatestTouching{options.target_prefix};

    for (const auto& value : options.injects) {
        auto [path, local] = split_assignment(value, "--inject");
        plan.actions.push_back(engine::InjectFile{path, read_file(local), 0755, policy});
    }
    for (const auto& value : options.replaces) {
        auto [path, local] = split_assignment(value, "--replace");
        engine::ReplaceEntry action;
        action.path = path;
        action.new_kind = tar::EntryKind::Regular;
        action.content = read_file(local);
        action.mode = 0755;
        action.mtime_policy = policy;
        plan.actions.push_back(std::move(action));
    }
    for (const auto& path : options.removes)
        plan.actions.push_back(engine::RemoveEntry{path});
    if (!options.prepend_entrypoint.empty())
        plan.actions.push_back(engine::PrependEntrypoint{options.prepend_entrypoint});

    if (plan.actions.empty())
        throw CliFailure{kExitUsage, "no edit actions given; nothing to do"};

    archive::ImageArchive image = load_from_file(options.archive_path);
    auto [edited, edit_report] = engine::apply_edit(image, plan);
    write_file(options.out_path, archive::save_archive(edited));

    if (options.json) {
        out << report::render(report::envelope("edit",
                                               resolve_generated_at(options.generated_at),
                                               report::to_json(edit_report)));
    } else {
        print_edit_report(out, edit_report);
        out << "wrote " << options.out_path << "\n";
    }
    return kExitSuccess;
}

struct AttackChainOptions {
    std::string archive_path;
    std::string payload_file;
    std::string payload_name = "ghostedit_rev_shell";
    std::string target_prefix = "usr/local/bin";
    std::string out_path;
    bool json = false;
    std::string generated_at;
};

int cmd_attack_chain(const AttackChainOptions& options, std::ostream& out) {
    Bytes payload;
    if (options.payload_file.empty()) {
        std::string_view marker(kMarkerPayload);
        payload.assign(marker.begin(), marker.end());
    } else {
        payload = read_file(options.payload_file);
    }

    Bytes bytes = read_file(options.archive_path);
    engine::AttackResult result =
        engine::run_attack_chain(std::span(bytes), payload, options.payload_name,
                                 options.target_prefix);
    write_file(options.out_path, result.archive_bytes);

    if (options.json) {
        out << report::render(report::envelope("attack-chain",
                                               resolve_generated_at(options.generated_at),
                                               report::to_json(result.report)));
    } else {
        print_edit_report(out, result.report);
        out << "wrote " << options.out_path << "\n";
    }
    return kExitSuccess;
}

struct AuditOptions {
    std::string archive_path;
    std::string reference_path;
    std::string trust_store;
    std::string tag;
    std::int64_t mtime_tolerance = audit::kDefaultMtimeToleranceSeconds;
    bool json = false;
    std::string generated_at;
};

int verdict_exit_code(audit::Verdict verdict) {
    switch (verdict) {
    case audit::Verdict::Clean: return kExitSuccess;
    case audit::Verdict::Suspicious: return kExitSuspicious;
    case audit::Verdict::Tampered: return kExitTampered;
    }
    return kExitSuccess;
}

int cmd_audit(const AuditOptions& options, std::ostream& out) {
    if (!options.reference_path.empty() && !options.trust_store.empty())
        throw CliFailure{kExitUsage, "--reference and --trust-store are mutually exclusive"};
    if (options.trust_store.empty() != options.tag.empty())
        throw CliFailure{kExitUsage, "--trust-store and --tag must be given together"};

    archive::ImageArchive image = load_from_file(options.archive_path);

    if (!options.reference_path.empty()) {
        archive::ImageArchive reference = load_from_file(options.reference_path);
        audit::TamperReport tamper = audit::diff_images(reference, image);
        audit::Verdict verdict = audit::verdict_for(tamper.findings);
        if (options.json) {
            out << report::render(report::envelope("audit",
                                                   resolve_generated_at(options.generated_at),
                                                   report::to_json(tamper)));
        } else {
            out << "reference image id sha256:" << tamper.reference_image_id.hex << "\n";
            out << "suspect image id   sha256:" << tamper.suspect_image_id.hex << "\n";
            out << "config drift:\n";
            for (const auto& drift : tamper.config_drift)
                out << "  " << drift.field << ": " << drift.before << " -> " << drift.after
                    << "\n";
            out << "findings:\n";
            print_findings(out, tamper.findings);
            out << "verdict: " << audit::verdict_name(verdict) << "\n";
        }
        return verdict_exit_code(verdict);
    }

    audit::IntegrityReport integrity = audit::verify_integrity(image);
    std::vector<audit::Finding> mtime =
        audit::detect_mtime_anomalies(image, options.mtime_tolerance);
    integrity.findings.insert(integrity.findings.end(), mtime.begin(), mtime.end());
    if (!options.trust_store.empty()) {
        std::optional<audit::Finding> mismatch =
            audit::verify_trust(image, options.tag, options.trust_store);
        if (mismatch)
            integrity.findings.push_back(std::move(*mismatch));
    }
    integrity.verdict = audit::verdict_for(integrity.findings);

    if (options.json) {
        out << report::render(report::envelope("audit",
                                               resolve_generated_at(options.generated_at),
                                               report::to_json(integrity)));
    } else {
        out << "image id sha256:" << integrity.image_id.hex << "\n";
        out << "findings:\n";
        print_findings(out, integrity.findings);
        out << "verdict: " << audit::verdict_name(integrity.verdict) << "\n";
    }
    return verdict_exit_code(integrity.verdict);
}

struct TrustOptions {
    std::string archive_path;
    std::string tag;
    std::string store;
    bool json = false;
    std::string generated_at;
};

int cmd_trust_record(const TrustOptions& options, std::ostream& out) {
    archive::ImageArchive image = load_from_file(options.archive_path);
    std::optional<std::string> recorded_at;
    if (!options.generated_at.empty())
        recorded_at = resolve_generated_at(options.generated_at);
    audit::TrustRecord record =
        audit::record_trust(image, options.tag, options.store, recorded_at);
    if (options.json) {
        out << report::render(report::envelope("trust-record",
                                               resolve_generated_at(options.generated_at),
                                               report::to_json(record)));
    } else {
        out << "recorded " << record.name_tag << " -> " << record.image_id.prefixed() << "\n";
    }
    return kExitSuccess;
}

int cmd_trust_verify(const TrustOptions& options, std::ostream& out) {
    archive::ImageArchive image = load_from_file(options.archive_path);
    std::optional<audit::Finding> mismatch =
        audit::verify_trust(image, options.tag, options.store);
    if (options.json) {
        ordered_json payload;
        payload["kind"] = "trust-verify";
        payload["name_tag"] = options.tag;
        payload["pass"] = !mismatch.has_value();
        payload["finding"] = mismatch ? report::to_json(*mismatch) : ordered_json(nullptr);
        out << report::render(report::envelope("trust-verify",
                                               resolve_generated_at(options.generated_at),
                                               std::move(payload)));
    } else if (mismatch) {
        out << "trust verification FAILED for " << options.tag << "\n";
        print_findings(out, {*mismatch});
    } else {
        out << "trust verification passed for " << options.tag << "\n";
    }
    return mismatch ? kExitTampered : kExitSuccess;
}

struct FixtureOptions {
    std::string name;
    std::string out_path;
};

int cmd_fixture(const FixtureOptions& options, std::ostream& out) {
    std::vector<std::string> names = fixtures::canned_fixture_names();
    if (std::find(names.begin(), names.end(), options.name) == names.end()) {
        std::string known;
        for (const auto& name : names)
            known += (known.empty() ? "" : ", ") + name;
        throw CliFailure{kExitUsage, "unknown fixture '" + options.name +
                                         "'; valid names: " + known};
    }
    fs::path out_path =
        options.out_path.empty() ? fs::path(options.name + ".tar") : fs::path(options.out_path);
    write_file(out_path, archive::save_archive(fixtures::canned_fixture(options.name)));
    out << "wrote " << out_path.string() << "\n";
    return kExitSuccess;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"docker-save archive inspection, layer tampering and tamper auditing"};
    app.require_subcommand(1);

    InspectOptions inspect_options;
    CLI::App* inspect = app.add_subcommand("inspect", "summarize an archive's layers and config");
    inspect->add_option("archive", inspect_options.archive_path, "docker-save tar")->required();
    inspect->add_option("--last-touch", inspect_options.last_touch_prefix,
                        "flag the last layer touching this prefix")
        ->capture_default_str();
    inspect->add_flag("--json", inspect_options.json, "emit a JSON report");
    inspect->add_option("--generated-at", inspect_options.generated_at,
                        "freeze the report timestamp (RFC 3339)");

    EditOptions edit_options;
    CLI::App* edit = app.add_subcommand("edit", "apply tamper actions to a target layer");
    edit->add_option("archive", edit_options.archive_path, "docker-save tar")->required();
    auto* target_layer = edit->add_option("--target-layer", edit_options.target_layer,
                                          "explicit layer index");
    edit->add_option("--target-prefix", edit_options.target_prefix,
                     "auto-select the last layer touching this prefix")
        ->excludes(target_layer);
    edit->add_option("--inject", edit_options.injects, "add ARCHIVE_PATH=LOCAL_FILE");
    edit->add_option("--replace", edit_options.replaces,
                     "replace ARCHIVE_PATH=LOCAL_FILE (entry becomes a regular file)");
    edit->add_option("--remove", edit_options.removes, "delete ARCHIVE_PATH from the layer");
    edit->add_option("--prepend-entrypoint", edit_options.prepend_entrypoint,
                     "prepend an absolute rootfs path to the entrypoint");
    edit->add_option("--mtime", edit_options.mtime, "stealth|preserve|honest")
        ->capture_default_str();
    edit->add_option("--out", edit_options.out_path, "output archive path")->required();
    edit->add_flag("--json", edit_options.json, "emit a JSON report");
    edit->add_option("--generated-at", edit_options.generated_at,
                     "freeze the report timestamp (RFC 3339)");

    AttackChainOptions attack_options;
    CLI::App* attack = app.add_subcommand(
        "attack-chain", "inject a payload into the latest matching layer and prepend it to "
                        "the entrypoint");
    attack->add_option("archive", attack_options.archive_path, "docker-save tar")->required();
    attack->add_option("--payload", attack_options.payload_file,
                       "payload file (defaults to a benign marker)");
    attack->add_option("--payload-name", attack_options.payload_name, "payload file name")
        ->capture_default_str();
    attack->add_option("--target-prefix", attack_options.target_prefix, "directory to blend into")
        ->capture_default_str();
    attack->add_option("--out", attack_options.out_path, "output archive path")->required();
    attack->add_flag("--json", attack_options.json, "emit a JSON report");
    attack->add_option("--generated-at", attack_options.generated_at,
                       "freeze the report timestamp (RFC 3339)");

    AuditOptions audit_options;
    CLI::App* audit_cmd = app.add_subcommand("audit", "verify integrity or diff against a "
                                                      "reference archive");
    audit_cmd->add_option("archive", audit_options.archive_path, "docker-save tar")->required();
    audit_cmd->add_option("--reference", audit_options.reference_path,
                          "known-good archive to diff against");
    audit_cmd->add_option("--trust-store", audit_options.trust_store,
                          "line-delimited JSON trust store");
    audit_cmd->add_option("--tag", audit_options.tag, "name:tag to look up in the trust store");
    audit_cmd->add_option("--mtime-tolerance", audit_options.mtime_tolerance,
                          "seconds of mtime slack past image creation")
        ->capture_default_str();
    audit_cmd->add_flag("--json", audit_options.json, "emit a JSON report");
    audit_cmd->add_option("--generated-at", audit_options.generated_at,
                          "freeze the report timestamp (RFC 3339)");

    TrustOptions trust_options;
    CLI::App* trust = app.add_subcommand("trust", "record or verify name:tag digest bindings");
    trust->require_subcommand(1);
    CLI::App* trust_record = trust->add_subcommand("record", "bind the archive's image id to "
                                                             "a tag");
    CLI::App* trust_verify = trust->add_subcommand("verify", "check the archive against the "
                                                             "recorded binding");
    for (CLI::App* sub : {trust_record, trust_verify}) {
        sub->add_option("archive", trust_options.archive_path, "docker-save tar")->required();
        sub->add_option("--tag", trust_options.tag, "name:tag")->required();
        sub->add_option("--store", trust_options.store, "trust store path")->required();
        sub->add_flag("--json", trust_options.json, "emit a JSON report");
        sub->add_option("--generated-at", trust_options.generated_at,
                        "freeze the report/record timestamp (RFC 3339)");
    }

    FixtureOptions fixture_options;
    CLI::App* fixture = app.add_subcommand("fixture", "write a canned synthetic archive");
    fixture->add_option("name", fixture_options.name, "fixture name")->required();
    fixture->add_option("--out", fixture_options.out_path,
                        "output path (defaults to <name>.tar)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (app.got_subcommand(inspect))
            return cmd_inspect(inspect_options, out);
        if (app.got_subcommand(edit))
            return cmd_edit(edit_options, out);
        if (app.got_subcommand(attack))
            return cmd_attack_chain(attack_options, out);
        if (app.got_subcommand(audit_cmd))
            return cmd_audit(audit_options, out);
        if (app.got_subcommand(trust)) {
            if (trust->got_subcommand(trust_record))
                return cmd_trust_record(trust_options, out);
            return cmd_trust_verify(trust_options, out);
        }
        if (app.got_subcommand(fixture))
            return cmd_fixture(fixture_options, out);
        err << "error: no command given\n";
        return kExitUsage;
    } catch (const CliFailure& failure) {
        err << "error: " << failure.message << "\n";
        return failure.exit_code;
    } catch (const Error& error) {
        err << "error: " << error.what() << "\n";
        return exit_code_for(error);
    } catch (const std::exception& error) {
        err << "error: " << error.what() << "\n";
        return kExitParse;
    }
}

} // namespace ghostedit::cli
