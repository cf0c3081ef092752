#pragma once

#include "adaptex/policy.hpp"
#include "adaptex/solver.hpp"

#include "json.hpp"

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace adaptex {

/// Missing, corrupt or mismatched artifact.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kFormatVersion = 1;

/// Identity of a grid and clock: axis names and nodes, time step, horizon.
nlohmann::json grid_json(const Grid& grid, double time_step, double horizon);
/// sha256 of grid_json plus the effective config, hex encoded.
std::string grid_signature(const nlohmann::json& grid, const nlohmann::json& config);

std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_file(const std::filesystem::path& path);

// Binary layout: 16-byte magic, u32 version, u64 header length, JSON header,
// then little-endian float64 payload.
void write_value_dump(const std::filesystem::path& path, const ValueField& field, const nlohmann::json& header);
/// The grid comes from the caller; node and slice counts must match the dump.
ValueField read_value_dump(const std::filesystem::path& path, const Grid& grid, nlohmann::json* header = nullptr);

void write_policy_dump(const std::filesystem::path& path, const PolicyGrid& policy, const nlohmann::json& header);
PolicyGrid read_policy_dump(const std::filesystem::path& path, const Grid& grid, nlohmann::json* header = nullptr);

/// Plot-ready policy rows (slice, t, coordinates, action, label); slices are
/// thinned evenly so that at most max_rows rows are written.
void write_policy_csv(const std::filesystem::path& path, const PolicyGrid& policy, long max_rows);
/// Node coordinates and log w at t = 0.
void write_values_csv(const std::filesystem::path& path, const ValueField& field);

enum class TrajectoryKind { impact, limit };

/// One row per decision sample, order send, order completion and path end.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory, TrajectoryKind kind,
                          const std::vector<std::string>& labels);

/// Directory that replaces `target` on commit and is erased otherwise.
class StagedDirectory {
 public:
  explicit StagedDirectory(std::filesystem::path target);
  ~StagedDirectory();
  StagedDirectory(const StagedDirectory&) = delete;
  StagedDirectory& operator=(const StagedDirectory&) = delete;

  const std::filesystem::path& path() const { return staging_; }
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path staging_;
  bool done_ = false;
};

/// Lists every regular file under `dir` with its size and sha256.
nlohmann::json file_inventory(const std::filesystem::path& dir);

void write_json(const std::filesystem::path& path, const nlohmann::json& value);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace adaptex
