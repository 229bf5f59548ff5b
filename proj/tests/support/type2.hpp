#pragma once

#include <random>
#include <string>
#include <vector>

// Randomized Type-2 transformations over a Python class slice: comment and
// blank-line insertion, whitespace changes, uniform re-indentation, consistent
// renaming of declared local names, and literal substitution. Every transform
// preserves the statement structure, so the clone hash must not change.
namespace nnbom::testsupport {

struct Type2Options {
    std::vector<std::string> renameable;  // locally bound names safe to rename
    bool comments = true;
    bool blank_lines = true;
    bool whitespace = true;
    bool reindent = true;
    bool renames = true;
    bool literals = true;
};

std::string apply_type2_transform(const std::string& source, const Type2Options& options,
                                  std::mt19937& rng);

}  // namespace nnbom::testsupport
