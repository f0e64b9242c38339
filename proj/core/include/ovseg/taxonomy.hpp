#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ovseg {

struct TaxonomyClass {
  std::string name;
  std::vector<std::string> synonyms;
  bool is_thing = true;
};

// Ordered class list; class ids are 0-based indices into `classes`.
// `seen`, when present, is an exact two-part partition of the indices
// (1 = seen, 0 = unseen) and is the authoritative split for reporting.
struct Taxonomy {
  std::vector<TaxonomyClass> classes;
  std::optional<std::vector<std::uint8_t>> seen;

  std::size_t size() const { return classes.size(); }
  bool is_seen(std::uint32_t class_id) const {
    return !seen || (*seen)[class_id] != 0;
  }

  void validate() const;
};

// Lowercase, trim, collapse internal whitespace runs to a single space.
std::string normalize_label(std::string_view label);

// All normalized match tokens of a class: the name and every synonym, plus
// their comma-separated parts. ADE20K-style labels like "signboard, sign"
// must match on either part.
std::vector<std::string> match_tokens(const TaxonomyClass& cls);

// One flag per test class: 1 iff any of its tokens matches any train token.
// Fallback for when the test taxonomy does not carry a curated split.
std::vector<std::uint8_t> taxonomy_split(const Taxonomy& train, const Taxonomy& test);

}  // namespace ovseg
