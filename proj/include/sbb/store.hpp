#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "sbb/steering.hpp"

// Append-only run store: a JSON-lines record file plus a manifest that is
// written at run start and finalized at the end. A store whose manifest is
// not finalized is resumable; finalized stores refuse further writes.
namespace sbb {

struct Manifest {
    std::string                      tool_version;
    json                             config = json::object();  // full snapshot
    std::string                      catalogs_hash;
    std::vector<std::string>         direction_ids;
    bool                             finalized = false;
    std::map<std::string, long long> record_counts;  // per condition
    double                           wall_seconds = 0.0;
    double                           accelerator_hours = 0.0;
    std::string                      started_at;   // ISO-8601 UTC
    std::string                      finished_at;  // set on finalize

    json            to_json() const;
    static Manifest from_json(const json & j);
};

class RunStore {
  public:
    // Opens `dir` for writing. Fresh directory: writes the manifest and an
    // empty record file. Existing unfinalized store: resumes after checking
    // that catalogs hash and config snapshot match. Existing finalized
    // store: error.
    static RunStore create_or_resume(const std::string & dir, Manifest manifest);

    // Read-only access to an existing store.
    static bool     exists(const std::string & dir);
    static Manifest read_manifest(const std::string & dir);
    // Streaming read; tolerates a trailing partial line (warning), rejects
    // interior garbage. `expected_catalogs_hash`, when non-empty, must match
    // the manifest (prevents mixing corpora).
    static std::vector<GenerationRecord> read_records(
        const std::string & dir, std::vector<std::string> * warnings = nullptr,
        const std::string & expected_catalogs_hash = "");

    void append(const GenerationRecord & rec);  // atomic single-line write
    bool contains(const std::string & key) const { return keys_.count(key) != 0; }
    std::size_t size() const { return keys_.size(); }

    void             finalize(double wall_seconds, double accelerator_hours = 0.0);
    const Manifest & manifest() const { return manifest_; }
    const std::string & dir() const { return dir_; }

    static std::string records_path(const std::string & dir);
    static std::string manifest_path(const std::string & dir);

    RunStore(RunStore && other) noexcept;
    RunStore & operator=(RunStore && other) noexcept;
    RunStore(const RunStore &) = delete;
    RunStore & operator=(const RunStore &) = delete;
    ~RunStore();

  private:
    RunStore() = default;

    std::string           dir_;
    Manifest              manifest_;
    std::set<std::string> keys_;
    int                   fd_ = -1;

    void write_manifest() const;
};

}  // namespace sbb
