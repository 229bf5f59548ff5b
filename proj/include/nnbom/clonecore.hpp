#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

// Module clone detection: normalize an extracted class body so that layout,
// comments, local identifier choices, and literal values do not affect its
// identity, then group equal hashes into clone families (Type-1/2 clones).
namespace nnbom::clonecore {

struct NormalizedForm {
    std::vector<std::string> tokens;
    std::string canonical;  // tokens joined by single spaces

    bool empty() const { return tokens.empty(); }
};

// Normalizes one class-definition slice:
//   - comments, blank lines and whitespace are dropped with the token layout
//   - locally bound simple names (parameters except `self`, assignment
//     targets, for/comprehension variables) become V1,V2,... in
//     first-occurrence order
//   - attribute names accessed via `self.` become A1,A2,...
//   - the class's own name becomes CLASS
//   - numeric literals become NUM, string literals STR
//   - keywords, method names and dotted external names are preserved
// Returns nullopt if the slice cannot be tokenized.
std::optional<NormalizedForm> normalize(std::string_view class_source);

// SHA-256 hex of the canonical text.
std::string module_hash(const NormalizedForm& form);

struct FamilyMemberInput {
    int module_index = 0;
    std::string hash;
    std::string repo;
    int release_year = 0;
    std::set<std::string> domains;
    std::string class_name;      // short class name, for the representative
    int64_t release_unix = 0;    // breaks representative ties
};

struct CloneFamily {
    std::string hash;
    std::vector<int> members;           // module indices, ascending
    std::set<std::string> repositories;
    int first_year = 0;
    int last_year = 0;
    std::map<std::string, int> domains;  // multiset over member domain labels
    int frequency = 0;
    std::string representative;  // earliest member's class name

    int lifespan() const { return last_year - first_year + 1; }
};

// One family per distinct hash, sorted by hash.
std::vector<CloneFamily> group_families(const std::vector<FamilyMemberInput>& records);

}  // namespace nnbom::clonecore
