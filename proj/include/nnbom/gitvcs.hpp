#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nnbom/extractors.hpp"

// VCS adapter backed by the `git` executable. The contract is small: list
// tags with the tagged commit's author timestamp, materialize a ref's tree
// (source and config files only), and diff two refs.
namespace nnbom::gitvcs {

struct NotARepository : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TagInfo {
    std::string name;
    int64_t commit_unix = 0;
};

class GitRepo {
  public:
    explicit GitRepo(std::string path);  // throws NotARepository

    const std::string& path() const { return path_; }

    // Tags ordered by commit time (name breaks ties); unreadable tags are
    // skipped and reported in `diagnostics`.
    std::vector<TagInfo> tags(std::vector<std::string>& diagnostics) const;

    TagInfo head() const;

    // One entry per tag in time order; an untagged repository yields a single
    // ("HEAD", head commit time) entry.
    std::vector<TagInfo> versions(std::vector<std::string>& diagnostics) const;

    // Loads `.py` and config file contents at `ref`; every top-level tree
    // entry is recorded for import classification.
    extractors::FileTree tree(const std::string& ref) const;

    // Exact added/modified/deleted `.py` set between two refs; renames count
    // as delete+add. Throws on diff failure (caller falls back to a full set).
    std::set<std::string> changed_py(const std::string& prev, const std::string& next) const;

  private:
    std::string path_;
};

}  // namespace nnbom::gitvcs
