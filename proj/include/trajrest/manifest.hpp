#pragma once
// Paired-image manifests: one `category<TAB>lq<TAB>hq` line per pair, paths
// relative to the manifest's directory, '#' starts a comment line.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace trajrest {

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ManifestEntry {
  std::string category;
  std::filesystem::path lq;
  std::filesystem::path hq;
  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  std::filesystem::path base_dir;
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const std::filesystem::path& p) const { return p.is_absolute() ? p : base_dir / p; }
};

// Validates field count (errors name the line), categories, and that every
// referenced file exists. An empty manifest is valid; a warning goes to stderr.
Manifest parse_manifest(const std::filesystem::path& path);

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace trajrest
