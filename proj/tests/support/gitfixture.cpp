#include "support/gitfixture.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "nnbom/util.hpp"

namespace fs = std::filesystem;

namespace nnbom::testsupport {

GitFixture::GitFixture() {
    char tmpl[] = "/tmp/nnbom-fixture-XXXXXX";
    if (!mkdtemp(tmpl)) throw std::runtime_error("mkdtemp failed");
    root_ = tmpl;
}

void GitFixture::git(const std::string& name, const std::vector<std::string>& args,
                     const std::string& iso_date) {
    std::vector<std::string> argv = {"git", "-C", repo_path(name),
                                     "-c", "user.name=fixture",
                                     "-c", "user.email=fixture@example.com"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::vector<std::string> env;
    if (!iso_date.empty()) {
        env.push_back("GIT_AUTHOR_DATE=" + iso_date);
        env.push_back("GIT_COMMITTER_DATE=" + iso_date);
    }
    auto result = util::run_command(argv, "", env);
    if (result.exit_code != 0) {
        throw std::runtime_error("git " + args.front() + " failed in " + name + ": " + result.err);
    }
}

void GitFixture::init_repo(const std::string& name) {
    fs::create_directories(repo_path(name));
    git(name, {"init", "-q", "-b", "main"});
}

void GitFixture::write_file(const std::string& name, const std::string& rel_path,
                            const std::string& content) {
    fs::path full = fs::path(repo_path(name)) / rel_path;
    fs::create_directories(full.parent_path());
    std::ofstream out(full, std::ios::binary | std::ios::trunc);
    out << content;
}

void GitFixture::remove_file(const std::string& name, const std::string& rel_path) {
    fs::remove(fs::path(repo_path(name)) / rel_path);
}

void GitFixture::commit(const std::string& name, const std::string& iso_date,
                        const std::string& tag) {
    git(name, {"add", "-A"}, iso_date);
    git(name, {"commit", "-q", "--allow-empty", "-m", "snapshot"}, iso_date);
    if (!tag.empty()) git(name, {"tag", tag}, iso_date);
}

}  // namespace nnbom::testsupport
