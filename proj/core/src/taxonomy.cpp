#include "ovseg/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "ovseg/errors.hpp"

namespace ovseg {

std::string normalize_label(std::string_view label) {
  std::string out;
  out.reserve(label.size());
  bool pending_space = false;
  for (char c : label) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

namespace {

void add_comma_parts(std::string_view text, std::vector<std::string>& out) {
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string_view part =
        text.substr(start, comma == std::string_view::npos ? comma : comma - start);
    std::string norm = normalize_label(part);
    if (!norm.empty() && std::find(out.begin(), out.end(), norm) == out.end()) {
      out.push_back(std::move(norm));
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
}

}  // namespace

std::vector<std::string> match_tokens(const TaxonomyClass& cls) {
  std::vector<std::string> tokens;
  std::string whole = normalize_label(cls.name);
  if (!whole.empty()) tokens.push_back(whole);
  add_comma_parts(cls.name, tokens);
  for (const std::string& syn : cls.synonyms) {
    std::string norm = normalize_label(syn);
    if (!norm.empty() && std::find(tokens.begin(), tokens.end(), norm) == tokens.end()) {
      tokens.push_back(norm);
    }
    add_comma_parts(syn, tokens);
  }
  return tokens;
}

void Taxonomy::validate() const {
  if (classes.empty()) throw validation_error("Taxonomy: class list is empty");
  std::unordered_set<std::string> names;
  for (const TaxonomyClass& cls : classes) {
    std::string norm = normalize_label(cls.name);
    if (norm.empty()) throw validation_error("Taxonomy: class name normalizes to empty");
    if (!names.insert(norm).second) {
      throw validation_error("Taxonomy: duplicate class name after normalization: '" + norm +
                             "'");
    }
  }
  if (seen && seen->size() != classes.size()) {
    throw validation_error("Taxonomy: seen split has " + std::to_string(seen->size()) +
                           " entries for " + std::to_string(classes.size()) + " classes");
  }
}

std::vector<std::uint8_t> taxonomy_split(const Taxonomy& train, const Taxonomy& test) {
  train.validate();
  test.validate();
  std::unordered_set<std::string> train_tokens;
  for (const TaxonomyClass& cls : train.classes) {
    for (std::string& t : match_tokens(cls)) train_tokens.insert(std::move(t));
  }
  std::vector<std::uint8_t> split(test.classes.size(), 0);
  for (std::size_t i = 0; i < test.classes.size(); ++i) {
    for (const std::string& t : match_tokens(test.classes[i])) {
      if (train_tokens.count(t)) {
        split[i] = 1;
        break;
      }
    }
  }
  return split;
}

}  // namespace ovseg
