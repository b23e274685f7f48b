#include "trajrest/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "trajrest/degrade.hpp"

namespace trajrest {

Manifest parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest: " + path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    const std::string where = path.string() + ":" + std::to_string(number);
    if (fields.size() != 3) {
      throw ManifestError(where + ": expected 3 tab-separated fields, found " + std::to_string(fields.size()));
    }
    if (!is_category(fields[0])) throw ManifestError(where + ": unknown category '" + fields[0] + "'");
    ManifestEntry e{fields[0], fields[1], fields[2]};
    for (const auto& p : {e.lq, e.hq}) {
      if (!std::filesystem::exists(m.resolve(p))) throw ManifestError(where + ": missing file " + m.resolve(p).string());
    }
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) std::fprintf(stderr, "warning: manifest %s has no entries\n", path.string().c_str());
  return m;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ManifestError("cannot write manifest: " + path.string());
  out << "# category\tlq\thq\n";
  for (const auto& e : manifest.entries) {
    out << e.category << '\t' << e.lq.generic_string() << '\t' << e.hq.generic_string() << '\n';
  }
}

}  // namespace trajrest
