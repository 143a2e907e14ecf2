#pragma once

#include <string>

#include "sensefuse/filters.hpp"

namespace sensefuse {

inline constexpr int kSnapshotVersion = 1;

struct SnapshotError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Serializes a filter state (map, UE density, designation) to versioned
/// JSON. Matrices are stored row-major; doubles round-trip bit-exactly.
std::string snapshot_to_json(const FilterState& fs);
FilterState snapshot_from_json(const std::string& text);

void save_snapshot(const FilterState& fs, const std::string& path);
FilterState load_snapshot(const std::string& path);

/// Combined post-fusion snapshot holding both overwritten states.
std::string fused_snapshot_to_json(const FilterState& fs_b, const FilterState& fs_m);

}  // namespace sensefuse
