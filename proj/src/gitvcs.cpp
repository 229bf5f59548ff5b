#include "nnbom/gitvcs.hpp"

#include <algorithm>

#include "nnbom/util.hpp"

namespace nnbom::gitvcs {

namespace {

bool wanted_file(const std::string& path) {
    if (path.ends_with(".py")) return true;
    auto slash = path.find_last_of('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    std::string dir = slash == std::string::npos ? "" : path.substr(0, slash);
    if (base.starts_with("requirements") && base.ends_with(".txt")) return true;
    if (dir == "requirements" && base.ends_with(".txt")) return true;
    return false;
}

}  // namespace

GitRepo::GitRepo(std::string path) : path_(std::move(path)) {
    auto res = util::run_command({"git", "-C", path_, "rev-parse", "--git-dir"});
    if (res.exit_code != 0) {
        throw NotARepository("not a git repository: " + path_);
    }
}

std::vector<TagInfo> GitRepo::tags(std::vector<std::string>& diagnostics) const {
    // %(*authordate:unix) dereferences annotated tags to the tagged commit.
    auto res = util::run_command({"git", "-C", path_, "for-each-ref", "refs/tags",
                                  "--format=%(refname:short)\t%(*authordate:unix)\t%(authordate:unix)"});
    if (res.exit_code != 0) {
        diagnostics.push_back("git for-each-ref failed: " + res.err);
        return {};
    }
    std::vector<TagInfo> out;
    for (const auto& line : util::split(res.out, '\n')) {
        if (util::trim(line).empty()) continue;
        auto fields = util::split(line, '\t');
        if (fields.size() != 3) {
            diagnostics.push_back("unreadable tag line skipped: " + line);
            continue;
        }
        const std::string& when = !fields[1].empty() ? fields[1] : fields[2];
        try {
            out.push_back({fields[0], std::stoll(when)});
        } catch (...) {
            diagnostics.push_back("tag with unreadable timestamp skipped: " + fields[0]);
        }
    }
    std::sort(out.begin(), out.end(), [](const TagInfo& a, const TagInfo& b) {
        return a.commit_unix != b.commit_unix ? a.commit_unix < b.commit_unix : a.name < b.name;
    });
    return out;
}

TagInfo GitRepo::head() const {
    auto res = util::run_command({"git", "-C", path_, "log", "-1", "--format=%at", "HEAD"});
    if (res.exit_code != 0) {
        throw NotARepository("repository has no readable HEAD: " + path_);
    }
    return {"HEAD", std::stoll(std::string(util::trim(res.out)))};
}

std::vector<TagInfo> GitRepo::versions(std::vector<std::string>& diagnostics) const {
    auto tagged = tags(diagnostics);
    if (!tagged.empty()) return tagged;
    return {head()};
}

extractors::FileTree GitRepo::tree(const std::string& ref) const {
    auto ls = util::run_command({"git", "-C", path_, "ls-tree", "-r", "--name-only", ref});
    if (ls.exit_code != 0) {
        throw std::runtime_error("git ls-tree failed for " + ref + ": " + ls.err);
    }
    extractors::FileTree tree;
    std::vector<std::string> paths;
    for (const auto& line : util::split(ls.out, '\n')) {
        std::string p(util::trim(line));
        if (p.empty()) continue;
        paths.push_back(p);
        auto slash = p.find('/');
        if (slash != std::string::npos) {
            tree.top_level.insert(p.substr(0, slash));
        } else if (p.ends_with(".py")) {
            tree.top_level.insert(p.substr(0, p.size() - 3));
        }
    }
    for (const auto& p : paths) {
        if (p == "setup.py" || wanted_file(p)) {
            auto show = util::run_command({"git", "-C", path_, "show", ref + ":" + p});
            if (show.exit_code == 0) tree.files[p] = std::move(show.out);
        }
    }
    return tree;
}

std::set<std::string> GitRepo::changed_py(const std::string& prev, const std::string& next) const {
    auto res = util::run_command(
        {"git", "-C", path_, "diff", "--name-status", "--no-renames", prev, next, "--", "*.py"});
    if (res.exit_code != 0) {
        throw std::runtime_error("git diff failed: " + res.err);
    }
    std::set<std::string> changed;
    for (const auto& line : util::split(res.out, '\n')) {
        if (util::trim(line).empty()) continue;
        auto fields = util::split(line, '\t');
        if (fields.size() < 2) continue;
        changed.insert(fields[1]);
    }
    return changed;
}

}  // namespace nnbom::gitvcs
