#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "warpforge/homography.hpp"
#include "warpforge/npt.hpp"

namespace warpforge {

/// Parsed match file. `pairs` follows `matches` when present, otherwise the
/// point arrays are paired by index.
struct MatchSet {
    KeypointSet ref;
    KeypointSet tgt;
    std::vector<Correspondence> pairs;
};

/// Grammar: a sequence of `key = value` entries; values are JSON and may span
/// lines; an entry ends where the next `key =` line starts. Blank lines and
/// lines starting with '#' between entries are ignored. Keys: ref_points,
/// tgt_points (arrays of [x, y]), optional ref_desc, tgt_desc (arrays of
/// number arrays, one per point, equal lengths), optional matches (arrays of
/// [i, j] indices into ref_points, tgt_points).
/// Throws InputError naming the offending field.
MatchSet parse_matches(const std::string& text);
MatchSet ingest_matches(const std::filesystem::path& path);

/// Writes the same grammar, one entry per key.
std::string format_matches(const MatchSet& m, bool write_matches = true);
void write_matches(const std::filesystem::path& path, const MatchSet& m, bool write_matches = true);

}  // namespace warpforge
