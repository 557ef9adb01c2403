#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fedsim/config.hpp"
#include "fedsim/engine.hpp"

namespace fedsim {

// Shortest round-trip decimal representation of a double (17 significant
// digits); the same formatter feeds both metric files so their values are
// textually identical.
std::string format_double(double v);

// JSON Lines, one object per round, keys in a fixed order; absent optional
// fields serialize as null. Wall time is deliberately not a payload field:
// metric files must be byte-identical across reruns and thread counts.
std::string metrics_to_jsonl(const std::vector<RoundRecord>& records);

// Same values as CSV. Optional fields become empty cells; the selected ids
// are joined with ';'.
std::string metrics_to_csv(const std::vector<RoundRecord>& records);

void write_metrics(const std::vector<RoundRecord>& records,
                   const std::filesystem::path& jsonl_path,
                   const std::filesystem::path& csv_path);

// Per-round wall-clock sidecar; informative only and never compared.
void write_timings(const std::vector<RoundRecord>& records, const std::filesystem::path& path);

// FNV-1a over the canonical config dump.
std::uint64_t config_hash(const FedConfig& cfg);

struct Manifest {
    std::string artifact_version = "1.0.0";
    std::string status = "running";  // running | complete | partial
    std::string started_utc;
    std::string finished_utc;
    std::string config_hash_hex;
    FedConfig config;
    std::string metrics_jsonl = "metrics.jsonl";
    std::string metrics_csv = "metrics.csv";
};

// Serialized as JSON via a temp file + rename, so a manifest on disk is
// never half-written.
void write_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

std::string utc_timestamp_now();

}  // namespace fedsim
