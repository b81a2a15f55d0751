#include "sbb/store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "sbb/jsonl.hpp"
#include "sbb/util.hpp"

namespace sbb {

json Manifest::to_json() const {
    json counts = json::object();
    for (const auto & [cond, n] : record_counts) counts[cond] = n;
    return json{{"tool_version", tool_version},
                {"config", config},
                {"catalogs_hash", catalogs_hash},
                {"direction_ids", direction_ids},
                {"finalized", finalized},
                {"record_counts", counts},
                {"wall_seconds", wall_seconds},
                {"accelerator_hours", accelerator_hours},
                {"started_at", started_at},
                {"finished_at", finished_at}};
}

Manifest Manifest::from_json(const json & j) {
    Manifest m;
    m.tool_version      = j.at("tool_version").get<std::string>();
    m.config            = j.at("config");
    m.catalogs_hash     = j.at("catalogs_hash").get<std::string>();
    m.direction_ids     = j.at("direction_ids").get<std::vector<std::string>>();
    m.finalized         = j.at("finalized").get<bool>();
    m.wall_seconds      = j.value("wall_seconds", 0.0);
    m.accelerator_hours = j.value("accelerator_hours", 0.0);
    m.started_at        = j.value("started_at", "");
    m.finished_at       = j.value("finished_at", "");
    for (const auto & [cond, n] : j.at("record_counts").items())
        m.record_counts[cond] = n.get<long long>();
    return m;
}

std::string RunStore::records_path(const std::string & dir) {
    return dir + "/records.jsonl";
}
std::string RunStore::manifest_path(const std::string & dir) {
    return dir + "/manifest.json";
}

bool RunStore::exists(const std::string & dir) {
    return std::filesystem::exists(manifest_path(dir));
}

Manifest RunStore::read_manifest(const std::string & dir) {
    std::ifstream in(manifest_path(dir));
    if (!in) throw IoError("no manifest in " + dir);
    json j;
    try {
        in >> j;
    } catch (const json::exception & e) {
        throw ValidationError("manifest in " + dir + " is not valid JSON: " + e.what());
    }
    return Manifest::from_json(j);
}

std::vector<GenerationRecord> RunStore::read_records(
    const std::string & dir, std::vector<std::string> * warnings,
    const std::string & expected_catalogs_hash) {
    Manifest m = read_manifest(dir);
    if (!expected_catalogs_hash.empty() && m.catalogs_hash != expected_catalogs_hash)
        throw ValidationError("run store " + dir + " was produced with catalogs hash " +
                              m.catalogs_hash + " but current catalogs hash is " +
                              expected_catalogs_hash + "; refusing to mix corpora");
    std::vector<GenerationRecord> out;
    bool dropped_tail = false;
    for_each_jsonl(records_path(dir),
                   [&](json && j) { out.push_back(GenerationRecord::from_json(j)); },
                   &dropped_tail);
    if (dropped_tail && warnings)
        warnings->push_back("records file in " + dir +
                            " ends with a partial line (interrupted write); "
                            "the incomplete record was ignored");
    return out;
}

RunStore RunStore::create_or_resume(const std::string & dir, Manifest manifest) {
    std::filesystem::create_directories(dir);
    RunStore store;
    store.dir_ = dir;

    const std::string rec_path = records_path(dir);
    if (exists(dir)) {
        Manifest existing = read_manifest(dir);
        if (existing.finalized)
            throw ValidationError("run store " + dir +
                                  " is finalized; refusing to modify it");
        if (existing.catalogs_hash != manifest.catalogs_hash)
            throw ValidationError("cannot resume " + dir + ": catalogs hash " +
                                  manifest.catalogs_hash + " does not match stored " +
                                  existing.catalogs_hash);
        if (existing.config != manifest.config)
            throw ValidationError("cannot resume " + dir +
                                  ": config differs from the stored manifest");
        if (existing.direction_ids != manifest.direction_ids)
            throw ValidationError("cannot resume " + dir +
                                  ": direction set differs from the stored manifest");
        store.manifest_ = std::move(existing);
    } else {
        if (std::filesystem::exists(rec_path))
            throw ValidationError(dir + " has records but no manifest; refusing");
        manifest.finalized  = false;
        manifest.started_at = iso8601_utc_now();
        store.manifest_     = std::move(manifest);
    }

    // Scan existing records: collect keys, rebuild per-condition counts, and
    // truncate a trailing partial line (from an interrupted writer) so the
    // file stays clean for appends.
    store.manifest_.record_counts.clear();
    if (std::filesystem::exists(rec_path)) {
        std::ifstream in(rec_path, std::ios::binary);
        if (!in) throw IoError("cannot open " + rec_path);
        std::string content((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
        std::size_t pos = 0, good_end = 0;
        while (pos < content.size()) {
            std::size_t nl = content.find('\n', pos);
            if (nl == std::string::npos) break;  // trailing partial line
            std::string line = content.substr(pos, nl - pos);
            if (!line.empty()) {
                json j;
                try {
                    j = json::parse(line);
                } catch (const json::exception & e) {
                    throw ValidationError(rec_path + ": corrupt interior record: " +
                                          e.what());
                }
                auto rec = GenerationRecord::from_json(j);
                store.keys_.insert(rec.key());
                store.manifest_.record_counts[rec.condition]++;
            }
            pos = good_end = nl + 1;
        }
        if (good_end < content.size()) {
            if (::truncate(rec_path.c_str(), static_cast<off_t>(good_end)) != 0)
                throw IoError("cannot truncate partial record line in " + rec_path);
        }
    }

    store.fd_ = ::open(rec_path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC,
                       0644);
    if (store.fd_ < 0)
        throw IoError("cannot open " + rec_path + " for append: " +
                      std::strerror(errno));
    store.write_manifest();
    return store;
}

void RunStore::append(const GenerationRecord & rec) {
    if (fd_ < 0) throw IoError("run store is closed");
    if (manifest_.finalized) throw ValidationError("run store is finalized");
    const std::string key = rec.key();
    if (keys_.count(key))
        throw ValidationError("duplicate record key " + key);
    std::string line = rec.to_json().dump();
    line.push_back('\n');
    ssize_t n = ::write(fd_, line.data(), line.size());
    if (n != static_cast<ssize_t>(line.size()))
        throw IoError("short write to run store (" + std::string(std::strerror(errno)) +
                      "); aborting");
    keys_.insert(key);
    manifest_.record_counts[rec.condition]++;
}

void RunStore::finalize(double wall_seconds, double accelerator_hours) {
    if (fd_ < 0) throw IoError("run store is closed");
    ::fsync(fd_);
    ::close(fd_);
    fd_                          = -1;
    manifest_.finalized          = true;
    manifest_.wall_seconds       = wall_seconds;
    manifest_.accelerator_hours  = accelerator_hours;
    manifest_.finished_at        = iso8601_utc_now();
    write_manifest();
}

void RunStore::write_manifest() const {
    write_text_file_atomic(manifest_path(dir_), manifest_.to_json().dump(2) + "\n");
}

RunStore::RunStore(RunStore && other) noexcept
    : dir_(std::move(other.dir_)), manifest_(std::move(other.manifest_)),
      keys_(std::move(other.keys_)), fd_(other.fd_) {
    other.fd_ = -1;
}

RunStore & RunStore::operator=(RunStore && other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        dir_      = std::move(other.dir_);
        manifest_ = std::move(other.manifest_);
        keys_     = std::move(other.keys_);
        fd_       = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

RunStore::~RunStore() {
    if (fd_ >= 0) ::close(fd_);  // unfinalized on disk -> resumable by design
}

}  // namespace sbb
