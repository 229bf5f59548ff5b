#pragma once

#include <map>
#include <string>
#include <vector>

// Builds throwaway git repositories with pinned commit dates so version
// enumeration and store serialization stay byte-deterministic across runs.
namespace nnbom::testsupport {

class GitFixture {
  public:
    // Creates a unique scratch directory under the system temp dir.
    GitFixture();

    const std::string& root() const { return root_; }
    std::string repo_path(const std::string& name) const { return root_ + "/" + name; }

    void init_repo(const std::string& name);
    void write_file(const std::string& name, const std::string& rel_path,
                    const std::string& content);
    void remove_file(const std::string& name, const std::string& rel_path);
    // Commits everything at the given UTC date ("2020-01-15T10:00:00Z");
    // an empty tag commits without tagging.
    void commit(const std::string& name, const std::string& iso_date, const std::string& tag = "");

  private:
    void git(const std::string& name, const std::vector<std::string>& args,
             const std::string& iso_date = "");
    std::string root_;
};

}  // namespace nnbom::testsupport
