// SPDX-License-Identifier: Apache-2.0
//
// Synthesizes docker-save archives entirely in memory. Layer contents
// are short ASCII stand-ins; what matters is that manifests, configs,
// digests and member layout behave exactly like the real format.
#include "ghostedit/fixtures.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "ghostedit/errors.hpp"
#include "ghostedit/time.hpp"

namespace ghostedit::fixtures {

using archive::ArchiveMember;
using archive::MemberRole;
using layerfs::LayerBlob;
using ordered_json = nlohmann::ordered_json;
using tar::TarEntry;

namespace {

constexpr const char* kDefaultPath =
    "PATH=/usr/local/sbin:/usr/local/bin:/usr/sbin:/usr/bin:/sbin:/bin";

TarEntry make_entry(const FixtureEntrySpec& spec, std::int64_t default_mtime) {
    TarEntry entry;
    entry.path = tar::normalize_path(spec.path);
    entry.kind = spec.kind;
    entry.mode = spec.mode;
    entry.mtime = spec.mtime.value_or(default_mtime);
    switch (spec.kind) {
    case EntryKind::Regular:
        entry.content.assign(spec.content_or_target.begin(), spec.content_or_target.end());
        break;
    case EntryKind::Symlink:
    case EntryKind::Hardlink:
        entry.link_target = spec.content_or_target;
        break;
    case EntryKind::Directory:
        break;
    case EntryKind::Opaque:
        raise(Errc::SpecInvalid, "fixture specs cannot request opaque entries");
    }
    return entry;
}

TarEntry outer_member(std::string path, tar::EntryKind kind, std::int64_t mtime) {
    TarEntry entry;
    entry.path = std::move(path);
    entry.kind = kind;
    entry.mode = kind == tar::EntryKind::Directory ? 0755 : 0644;
    entry.mtime = mtime;
    return entry;
}

// Spec shorthand used by the canned definitions.
FixtureEntrySpec file(std::string path, std::string content, std::uint16_t mode = 0644) {
    return {std::move(path), EntryKind::Regular, std::move(content), mode, std::nullopt};
}
FixtureEntrySpec exec_file(std::string path, std::string content) {
    return file(std::move(path), std::move(content), 0755);
}
FixtureEntrySpec dir(std::string path) {
    return {std::move(path), EntryKind::Directory, "", 0755, std::nullopt};
}
FixtureEntrySpec link(std::string path, std::string target) {
    return {std::move(path), EntryKind::Symlink, std::move(target), 0777, std::nullopt};
}

HistorySpec run(std::string created_by) { return {std::move(created_by), false}; }
HistorySpec nop(std::string created_by) { return {std::move(created_by), true}; }

FixtureSpec base_spec(const std::string& name_tag) {
    FixtureSpec spec;
    spec.name_tag = name_tag;
    spec.created = kFixtureCreated;
    spec.env = {kDefaultPath};
    return spec;
}

LayerSpec debian_base_layer(const std::string& flavor) {
    return {{
        dir("bin"),
        exec_file("bin/sh", "stub: dash shell (" + flavor + ")\n"),
        dir("etc"),
        file("etc/os-release",
             "PRETTY_NAME=\"Debian GNU/Linux 12 (bookworm)\"\nID=debian\n"),
        file("etc/debian_version", "12.7\n"),
        dir("usr"),
        dir("usr/bin"),
        exec_file("usr/bin/env", "stub: coreutils env (" + flavor + ")\n"),
        dir("usr/local"),
        dir("usr/lib"),
        dir("var"),
    }};
}

LayerSpec debian_deps_layer(const std::string& flavor) {
    return {{
        dir("usr/lib/x86_64-linux-gnu"),
        file("usr/lib/x86_64-linux-gnu/libc.so.6", "stub: glibc 2.36 (" + flavor + ")\n"),
        file("usr/lib/x86_64-linux-gnu/libssl.so.3", "stub: openssl 3.0 (" + flavor + ")\n"),
        dir("var/lib"),
        dir("var/lib/dpkg"),
        file("var/lib/dpkg/status", "stub: dpkg status (" + flavor + ")\n"),
    }};
}

const char* kAddRootfsHistory =
    "/bin/sh -c #(nop) ADD file:8a9218592e5d736a05a1821a6dd38b205ee02e7bc85a81f50a5aa9b43d0a2cf1 "
    "in / ";
const char* kAptDepsHistory =
    "/bin/sh -c set -eux; apt-get update; apt-get install -y --no-install-recommends "
    "ca-certificates netbase tzdata; rm -rf /var/lib/apt/lists/*";

FixtureSpec python_like() {
    FixtureSpec spec = base_spec("fixtures/python:3.12-slim");
    spec.env = {kDefaultPath, "LANG=C.UTF-8", "PYTHON_VERSION=3.12.5"};
    spec.command = {"python3"};

    spec.layers.push_back(debian_base_layer("python"));
    spec.layers.push_back(debian_deps_layer("python"));
    spec.layers.push_back({{
        dir("etc/ssl"),
        dir("etc/ssl/certs"),
        file("etc/ssl/certs/ca-certificates.crt", "stub: CA bundle\n"),
    }});
    spec.layers.push_back({{
        file("etc/timezone", "Etc/UTC\n"),
        file("etc/localtime", "stub: tzdata Etc/UTC\n"),
    }});
    spec.layers.push_back({{
        dir("usr/local/lib"),
        file("usr/local/lib/libpython3.12.so.1.0", "stub: libpython 3.12.5\n"),
        dir("usr/local/lib/python3.12"),
        file("usr/local/lib/python3.12/os.py", "stub: stdlib os module\n"),
        file("usr/local/lib/python3.12/abc.py", "stub: stdlib abc module\n"),
        dir("usr/local/lib/python3.12/test"),
        file("usr/local/lib/python3.12/test/test_os.py", "stub: stdlib test module\n"),
        dir("usr/local/bin"),
        exec_file("usr/local/bin/python3.12", "stub: cpython 3.12.5 interpreter\n"),
    }});
    spec.layers.push_back({{
        dir("usr/local/lib/python3.12/site-packages"),
        dir("usr/local/lib/python3.12/site-packages/pip"),
        file("usr/local/lib/python3.12/site-packages/pip/__init__.py", "stub: pip 24.2\n"),
        exec_file("usr/local/bin/pip3", "stub: pip launcher\n"),
    }});
    spec.layers.push_back({{
        file("usr/local/lib/python3.12/test/.wh..wh..opq", ""),
        file("etc/ld.so.cache", "stub: ldconfig cache\n"),
    }});
    spec.layers.push_back({{
        link("usr/local/bin/python3", "python3.12"),
        link("usr/local/bin/python", "python3"),
        link("usr/local/bin/pip", "pip3"),
    }});

    spec.history = {
        run(kAddRootfsHistory),
        nop("/bin/sh -c #(nop)  ENV PATH=/usr/local/sbin:/usr/local/bin:/usr/sbin:/usr/bin:"
            "/sbin:/bin"),
        run(kAptDepsHistory),
        run("/bin/sh -c set -eux; update-ca-certificates"),
        run("/bin/sh -c set -eux; echo 'Etc/UTC' > /etc/timezone"),
        nop("/bin/sh -c #(nop)  ENV LANG=C.UTF-8"),
        nop("/bin/sh -c #(nop)  ENV PYTHON_VERSION=3.12.5"),
        run("/bin/sh -c set -eux; wget -O python.tar.xz "
            "\"https://www.python.org/ftp/python/3.12.5/Python-3.12.5.tar.xz\"; ./configure "
            "--enable-optimizations; make -j \"$(nproc)\"; make install"),
        run("/bin/sh -c set -eux; python3.12 /tmp/get-pip.py --disable-pip-version-check"),
        run("/bin/sh -c set -eux; find /usr/local -depth -type d -a -name test -exec rm -rf "
            "'{}' +; ldconfig"),
        run("/bin/sh -c set -eux; for src in idle3 pydoc3 python3 python3-config; do dst=\"$("
            "echo \"$src\" | tr -d 3)\"; ln -svT \"$src\" \"/usr/local/bin/$dst\"; done"),
        nop("/bin/sh -c #(nop)  CMD [\"python3\"]"),
    };
    return spec;
}

FixtureSpec alpine_like() {
    FixtureSpec spec = base_spec("fixtures/alpine:3.20.2");
    spec.command = {"/bin/sh"};
    spec.layers.push_back({{
        dir("bin"),
        exec_file("bin/busybox", "stub: busybox 1.36.1 multi-call binary\n"),
        link("bin/sh", "busybox"),
        dir("etc"),
        file("etc/alpine-release", "3.20.2\n"),
        file("etc/os-release", "PRETTY_NAME=\"Alpine Linux v3.20\"\nID=alpine\n"),
        dir("usr"),
        dir("usr/bin"),
    }});
    spec.history = {
        run("/bin/sh -c #(nop) ADD file:0c00f0e34c34494e24a1d6bbed6d0ed56129b36d9a1e9e82c517da"
            "657cb85a5a in / "),
        nop("/bin/sh -c #(nop)  CMD [\"/bin/sh\"]"),
    };
    return spec;
}

FixtureSpec ubuntu_like() {
    FixtureSpec spec = base_spec("fixtures/ubuntu:20.04");
    spec.command = {"/bin/bash"};
    spec.layers.push_back({{
        dir("bin"),
        exec_file("bin/bash", "stub: GNU bash 5.0 (focal)\n"),
        dir("etc"),
        file("etc/os-release", "PRETTY_NAME=\"Ubuntu 20.04.6 LTS\"\nID=ubuntu\n"),
        file("etc/lsb-release", "DISTRIB_ID=Ubuntu\nDISTRIB_RELEASE=20.04\n"),
        dir("usr"),
        dir("usr/bin"),
        exec_file("usr/bin/dpkg", "stub: dpkg 1.19 (focal)\n"),
        dir("var"),
        dir("var/lib"),
        dir("var/lib/dpkg"),
        file("var/lib/dpkg/status", "stub: dpkg status (focal)\n"),
    }});
    spec.layers.push_back({{
        dir("etc/apt"),
        file("etc/apt/sources.list", "deb http://archive.ubuntu.com/ubuntu focal main\n"),
        exec_file("usr/bin/apt", "stub: apt 2.0 (focal)\n"),
    }});
    spec.history = {
        run(kAddRootfsHistory),
        run("/bin/sh -c set -eux; sed -i 's/main$/main universe/' /etc/apt/sources.list"),
        nop("/bin/sh -c #(nop)  CMD [\"/bin/bash\"]"),
    };
    return spec;
}

FixtureSpec httpd_like() {
    FixtureSpec spec = base_spec("fixtures/httpd:2.4");
    spec.env = {"PATH=/usr/local/apache2/bin:/usr/local/sbin:/usr/local/bin:/usr/sbin:/usr/bin:"
                "/sbin:/bin",
                "HTTPD_VERSION=2.4.62"};
    spec.command = {"httpd-foreground"};
    spec.layers.push_back(debian_base_layer("httpd"));
    spec.layers.push_back(debian_deps_layer("httpd"));
    spec.layers.push_back({{
        dir("usr/local/apache2"),
        dir("usr/local/apache2/bin"),
        exec_file("usr/local/apache2/bin/httpd", "stub: apache httpd 2.4.62\n"),
        dir("usr/local/apache2/conf"),
        file("usr/local/apache2/conf/httpd.conf", "stub: Listen 80\n"),
        dir("usr/local/apache2/htdocs"),
        file("usr/local/apache2/htdocs/index.html", "<html><body><h1>It works!</h1></body>"
                                                    "</html>\n"),
    }});
    spec.layers.push_back({{
        dir("usr/local/bin"),
        exec_file("usr/local/bin/httpd-foreground", "stub: exec httpd -DFOREGROUND\n"),
    }});
    spec.history = {
        run(kAddRootfsHistory),
        run(kAptDepsHistory),
        run("/bin/sh -c set -eux; make -C httpd-2.4.62 install"),
        run("COPY httpd-foreground /usr/local/bin/ # buildkit"),
        nop("/bin/sh -c #(nop)  EXPOSE 80"),
        nop("/bin/sh -c #(nop)  CMD [\"httpd-foreground\"]"),
    };
    return spec;
}

FixtureSpec nginx_like() {
    FixtureSpec spec = base_spec("fixtures/nginx:1.27");
    spec.env = {kDefaultPath, "NGINX_VERSION=1.27.1"};
    spec.entrypoint = {"/docker-entrypoint.sh", "nginx"};
    spec.command = {"-g", "daemon off;"};
    spec.layers.push_back(debian_base_layer("nginx"));
    spec.layers.push_back(debian_deps_layer("nginx"));
    spec.layers.push_back({{
        dir("usr/sbin"),
        exec_file("usr/sbin/nginx", "stub: nginx 1.27.1 server binary\n"),
        dir("etc/nginx"),
        file("etc/nginx/nginx.conf", "stub: worker_processes auto;\n"),
        dir("usr/share"),
        dir("usr/share/nginx"),
        dir("usr/share/nginx/html"),
        file("usr/share/nginx/html/index.html",
             "<html><body><h1>Welcome to nginx!</h1></body></html>\n"),
    }});
    spec.layers.push_back({{
        exec_file("docker-entrypoint.sh", "stub: nginx entrypoint dispatcher\n"),
        dir("docker-entrypoint.d"),
        exec_file("docker-entrypoint.d/10-listen-on-ipv6-by-default.sh",
                  "stub: ipv6 listener tweak\n"),
        dir("usr/local/bin"),
        exec_file("usr/local/bin/envsubst", "stub: gettext envsubst\n"),
    }});
    spec.history = {
        run(kAddRootfsHistory),
        run(kAptDepsHistory),
        run("/bin/sh -c set -eux; apt-get install -y --no-install-recommends nginx=1.27.1"),
        run("COPY docker-entrypoint.sh docker-entrypoint.d /  # buildkit"),
        nop("/bin/sh -c #(nop)  ENTRYPOINT [\"/docker-entrypoint.sh\" \"nginx\"]"),
        nop("/bin/sh -c #(nop)  EXPOSE 80"),
        nop("/bin/sh -c #(nop)  CMD [\"-g\" \"daemon off;\"]"),
    };
    return spec;
}

FixtureSpec node_like() {
    FixtureSpec spec = base_spec("fixtures/node:22");
    spec.env = {kDefaultPath, "NODE_VERSION=22.7.0"};
    spec.entrypoint = {"docker-entrypoint.sh"};
    spec.command = {"node"};
    spec.layers.push_back(debian_base_layer("node"));
    spec.layers.push_back(debian_deps_layer("node"));
    spec.layers.push_back({{
        dir("usr/local/bin"),
        exec_file("usr/local/bin/node", "stub: node 22.7.0 runtime\n"),
        dir("usr/local/lib"),
        dir("usr/local/lib/node_modules"),
        dir("usr/local/lib/node_modules/npm"),
        dir("usr/local/lib/node_modules/npm/bin"),
        file("usr/local/lib/node_modules/npm/bin/npm-cli.js", "stub: npm cli 10.8\n"),
        link("usr/local/bin/npm", "../lib/node_modules/npm/bin/npm-cli.js"),
    }});
    spec.layers.push_back({{
        exec_file("usr/local/bin/docker-entrypoint.sh", "stub: node entrypoint dispatcher\n"),
    }});
    spec.history = {
        run(kAddRootfsHistory),
        run(kAptDepsHistory),
        run("/bin/sh -c set -eux; tar -xJf node-v22.7.0-linux-x64.tar.xz -C /usr/local "
            "--strip-components=1"),
        run("COPY docker-entrypoint.sh /usr/local/bin/ # buildkit"),
        nop("/bin/sh -c #(nop)  ENTRYPOINT [\"docker-entrypoint.sh\"]"),
        nop("/bin/sh -c #(nop)  CMD [\"node\"]"),
    };
    return spec;
}

FixtureSpec postgres_like() {
    FixtureSpec spec = base_spec("fixtures/postgres:17");
    spec.env = {"PATH=/usr/local/sbin:/usr/local/bin:/usr/sbin:/usr/bin:/sbin:/bin:"
                "/usr/lib/postgresql/17/bin",
                "PG_MAJOR=17"};
    spec.entrypoint = {"docker-entrypoint.sh"};
    spec.command = {"postgres"};
    spec.layers.push_back(debian_base_layer("postgres"));
    spec.layers.push_back({{
        dir("usr/lib/locale"),
        file("usr/lib/locale/C.UTF-8", "stub: compiled locale\n"),
        file("etc/locale.gen", "en_US.UTF-8 UTF-8\n"),
    }});
    spec.layers.push_back({{
        dir("usr/lib/postgresql"),
        dir("usr/lib/postgresql/17"),
        dir("usr/lib/postgresql/17/bin"),
        exec_file("usr/lib/postgresql/17/bin/postgres", "stub: postgres 17.0 server\n"),
        dir("usr/share/postgresql"),
        file("usr/share/postgresql/postgresql.conf.sample", "stub: shared_buffers = 128MB\n"),
    }});
    spec.layers.push_back({{
        dir("usr/local/bin"),
        exec_file("usr/local/bin/docker-entrypoint.sh", "stub: postgres entrypoint\n"),
        exec_file("usr/local/bin/gosu", "stub: gosu 1.17 (postgres)\n"),
    }});
    spec.history = {
        run(kAddRootfsHistory),
        run("/bin/sh -c set -eux; localedef -i en_US -f UTF-8 en_US.UTF-8"),
        run("/bin/sh -c set -eux; apt-get install -y postgresql-17"),
        run("COPY docker-entrypoint.sh gosu /usr/local/bin/ # buildkit"),
        nop("/bin/sh -c #(nop)  ENTRYPOINT [\"docker-entrypoint.sh\"]"),
        nop("/bin/sh -c #(nop)  EXPOSE 5432"),
        nop("/bin/sh -c #(nop)  CMD [\"postgres\"]"),
    };
    return spec;
}

FixtureSpec ubi_like() {
    FixtureSpec spec = base_spec("fixtures/ubi:9");
    spec.env = {kDefaultPath, "container=oci"};
    spec.command = {"/bin/bash"};
    spec.layers.push_back({{
        dir("bin"),
        exec_file("bin/bash", "stub: GNU bash 5.1 (el9)\n"),
        dir("etc"),
        file("etc/os-release", "NAME=\"Red Hat Enterprise Linux\"\nVERSION_ID=\"9.4\"\n"),
        file("etc/redhat-release", "Red Hat Enterprise Linux release 9.4 (Plow)\n"),
        dir("var"),
        dir("var/lib"),
        dir("var/lib/rpm"),
        file("var/lib/rpm/Packages", "stub: rpm database\n"),
    }});
    spec.layers.push_back({{
        dir("usr"),
        dir("usr/local"),
        dir("usr/local/bin"),
        exec_file("usr/local/bin/platform-python", "stub: platform python shim\n"),
    }});
    spec.history = {
        run("/bin/sh -c #(nop) ADD file:ubi9-rootfs.tar in / "),
        run("/bin/sh -c set -eux; install -m 0755 platform-python /usr/local/bin/"),
        nop("/bin/sh -c #(nop)  CMD [\"/bin/bash\"]"),
    };
    return spec;
}

FixtureSpec redis_like() {
    FixtureSpec spec = base_spec("fixtures/redis:7.4");
    spec.env = {kDefaultPath, "REDIS_VERSION=7.4.0"};
    spec.entrypoint = {"docker-entrypoint.sh"};
    spec.command = {"redis-server"};
    spec.layers.push_back(debian_base_layer("redis"));
    spec.layers.push_back({{
        dir("usr/local/bin"),
        exec_file("usr/local/bin/gosu", "stub: gosu 1.17 (redis)\n"),
    }});
    spec.layers.push_back({{
        exec_file("usr/local/bin/redis-server", "stub: redis-server 7.4.0\n"),
        exec_file("usr/local/bin/redis-cli", "stub: redis-cli 7.4.0\n"),
    }});
    spec.layers.push_back({{
        exec_file("usr/local/bin/docker-entrypoint.sh", "stub: redis entrypoint\n"),
        dir("data"),
    }});
    spec.history = {
        run(kAddRootfsHistory),
        run("/bin/sh -c set -eux; wget -O /usr/local/bin/gosu "
            "\"https://github.com/tianon/gosu/releases/download/1.17/gosu-amd64\""),
        run("/bin/sh -c set -eux; make -C redis-7.4.0 install"),
        run("COPY docker-entrypoint.sh /usr/local/bin/ # buildkit"),
        nop("/bin/sh -c #(nop)  ENTRYPOINT [\"docker-entrypoint.sh\"]"),
        nop("/bin/sh -c #(nop)  EXPOSE 6379"),
        nop("/bin/sh -c #(nop)  CMD [\"redis-server\"]"),
    };
    return spec;
}

FixtureSpec ubuntu_base_like() {
    FixtureSpec spec = base_spec("fixtures/ubuntu:24.04");
    spec.command = {"/bin/bash"};
    spec.layers.push_back({{
        dir("bin"),
        exec_file("bin/bash", "stub: GNU bash 5.2 (noble)\n"),
        dir("etc"),
        file("etc/os-release", "PRETTY_NAME=\"Ubuntu 24.04.1 LTS\"\nID=ubuntu\n"),
        dir("usr"),
        dir("usr/bin"),
        exec_file("usr/bin/apt", "stub: apt 2.7 (noble)\n"),
        dir("var"),
        dir("var/lib"),
        dir("var/lib/dpkg"),
        file("var/lib/dpkg/status", "stub: dpkg status (noble)\n"),
    }});
    spec.layers.push_back({{
        dir("usr/local"),
        dir("usr/local/bin"),
        exec_file("usr/local/bin/unminimize", "stub: unminimize helper (noble)\n"),
    }});
    spec.history = {
        run(kAddRootfsHistory),
        run("/bin/sh -c set -eux; install -m 0755 unminimize /usr/local/bin/"),
        nop("/bin/sh -c #(nop)  CMD [\"/bin/bash\"]"),
    };
    return spec;
}

} // namespace

ImageArchive build_fixture(const FixtureSpec& spec) {
    std::optional<std::int64_t> created_epoch = parse_rfc3339(spec.created);
    if (!created_epoch)
        raise(Errc::SpecInvalid, "created '" + spec.created + "' is not an RFC 3339 timestamp");
    if (spec.layers.empty())
        raise(Errc::SpecInvalid, "fixture needs at least one layer");
    if (spec.name_tag.find(':') == std::string::npos || spec.name_tag.front() == ':')
        raise(Errc::SpecInvalid, "name_tag '" + spec.name_tag + "' is not name:tag shaped");
    auto non_empty = static_cast<std::size_t>(
        std::count_if(spec.history.begin(), spec.history.end(),
                      [](const HistorySpec& h) { return !h.empty_layer; }));
    if (non_empty != spec.layers.size())
        raise(Errc::SpecInvalid, "history lists " + std::to_string(non_empty) +
                                     " non-empty entries for " +
                                     std::to_string(spec.layers.size()) + " layers");

    ImageArchive image;
    std::vector<Digest> diff_ids;
    for (const LayerSpec& layer_spec : spec.layers) {
        if (layer_spec.entries.empty())
            raise(Errc::SpecInvalid, "fixture layers must not be empty");
        LayerBlob layer;
        for (const FixtureEntrySpec& entry_spec : layer_spec.entries)
            layer.entries.push_back(make_entry(entry_spec, *created_epoch));
        diff_ids.push_back(archive::compute_diff_id(layer));
        image.layers.push_back(std::move(layer));
    }
    {
        std::set<std::string> seen;
        for (const Digest& d : diff_ids)
            if (!seen.insert(d.hex).second)
                raise(Errc::SpecInvalid,
                      "two layers serialize to identical bytes; layer directories would "
                      "collide");
    }

    ordered_json config;
    config["architecture"] = "amd64";
    config["config"] = ordered_json::object();
    config["config"]["Env"] = spec.env;
    config["config"]["Cmd"] = spec.command;
    config["config"]["Entrypoint"] = spec.entrypoint;
    config["created"] = spec.created;
    config["history"] = ordered_json::array();
    for (const HistorySpec& h : spec.history) {
        ordered_json entry;
        entry["created"] = spec.created;
        entry["created_by"] = h.created_by;
        if (h.empty_layer)
            entry["empty_layer"] = true;
        config["history"].push_back(std::move(entry));
    }
    config["os"] = "linux";
    config["rootfs"] = ordered_json::object();
    config["rootfs"]["type"] = "layers";
    config["rootfs"]["diff_ids"] = ordered_json::array();
    for (const Digest& d : diff_ids)
        config["rootfs"]["diff_ids"].push_back(d.prefixed());

    std::string config_text = config.dump();
    Bytes config_raw(config_text.begin(), config_text.end());
    image.config = archive::ImageConfig::parse(config_raw);
    const std::string config_path = sha256(std::span(config_raw)).hex + ".json";

    ordered_json manifest_doc = ordered_json::array();
    {
        ordered_json item;
        item["Config"] = config_path;
        item["RepoTags"] = ordered_json::array({spec.name_tag});
        item["Layers"] = ordered_json::array();
        for (const Digest& d : diff_ids)
            item["Layers"].push_back(d.hex + "/layer.tar");
        manifest_doc.push_back(std::move(item));
    }
    std::string manifest_text = manifest_doc.dump();
    image.manifest =
        archive::Manifest::parse(Bytes(manifest_text.begin(), manifest_text.end()));

    auto colon = spec.name_tag.rfind(':');
    ordered_json repositories;
    repositories[spec.name_tag.substr(0, colon)][spec.name_tag.substr(colon + 1)] =
        diff_ids.back().hex;
    std::string repositories_text = repositories.dump();

    auto add_member = [&](MemberRole role, int layer_index, tar::TarEntry entry) {
        image.members.push_back(ArchiveMember{role, layer_index, std::move(entry)});
    };

    add_member(MemberRole::Config, -1,
               outer_member(config_path, tar::EntryKind::Regular, *created_epoch));
    for (std::size_t i = 0; i < diff_ids.size(); ++i) {
        const std::string dir_name = diff_ids[i].hex;
        add_member(MemberRole::Extra, -1,
                   outer_member(dir_name, tar::EntryKind::Directory, *created_epoch));
        tar::TarEntry version = outer_member(dir_name + "/VERSION", tar::EntryKind::Regular,
                                             *created_epoch);
        version.content = {'1', '.', '0'};
        add_member(MemberRole::Extra, -1, std::move(version));
        tar::TarEntry stub = outer_member(dir_name + "/json", tar::EntryKind::Regular,
                                          *created_epoch);
        const std::string stub_text = R"({"architecture":"amd64","os":"linux"})";
        stub.content.assign(stub_text.begin(), stub_text.end());
        add_member(MemberRole::Extra, -1, std::move(stub));
        add_member(MemberRole::Layer, static_cast<int>(i),
                   outer_member(dir_name + "/layer.tar", tar::EntryKind::Regular,
                                *created_epoch));
    }
    tar::TarEntry repositories_member =
        outer_member("repositories", tar::EntryKind::Regular, *created_epoch);
    repositories_member.content.assign(repositories_text.begin(), repositories_text.end());
    add_member(MemberRole::Extra, -1, std::move(repositories_member));
    add_member(MemberRole::Manifest, -1,
               outer_member("manifest.json", tar::EntryKind::Regular, *created_epoch));

    return image;
}

std::vector<std::string> canned_fixture_names() {
    return {"python-like", "alpine-like", "ubuntu-like",      "httpd-like", "nginx-like",
            "node-like",   "postgres-like", "ubi-like", "redis-like", "ubuntu-base-like"};
}

std::vector<std::string> attack_chain_fixture_names() {
    return {"httpd-like", "nginx-like",  "node-like",        "postgres-like",
            "ubi-like",   "redis-like",  "ubuntu-base-like"};
}

FixtureSpec canned_spec(const std::string& name) {
    if (name == "python-like")
        return python_like();
    if (name == "alpine-like")
        return alpine_like();
    if (name == "ubuntu-like")
        return ubuntu_like();
    if (name == "httpd-like")
        return httpd_like();
    if (name == "nginx-like")
        return nginx_like();
    if (name == "node-like")
        return node_like();
    if (name == "postgres-like")
        return postgres_like();
    if (name == "ubi-like")
        return ubi_like();
    if (name == "redis-like")
        return redis_like();
    if (name == "ubuntu-base-like")
        return ubuntu_base_like();
    raise(Errc::SpecInvalid, "unknown fixture '" + name + "'");
}

ImageArchive canned_fixture(const std::string& name) { return build_fixture(canned_spec(name)); }

std::vector<std::pair<std::string, ImageArchive>> canned_fixtures() {
    std::vector<std::pair<std::string, ImageArchive>> out;
    for (const std::string& name : canned_fixture_names())
        out.emplace_back(name, canned_fixture(name));
    return out;
}

} // namespace ghostedit::fixtures
