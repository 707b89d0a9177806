#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stackrnn/controller.hpp"

namespace stackrnn::corpus {

inline constexpr TokenId pad_id = 0;
inline constexpr TokenId unk_id = 1;
inline constexpr TokenId eos_id = 2;
inline constexpr std::string_view pad_token = "<pad>";
inline constexpr std::string_view unk_token = "<unk>";
inline constexpr std::string_view eos_token = "<eos>";

std::vector<std::string> tokenize(std::string_view line);
// All lines of a UTF-8 text file, with a trailing '\r' stripped.
std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, std::span<const std::string> lines);

// Token <-> id map. Ids 0..2 are reserved; the rest are ordered by descending
// frequency, ties broken lexicographically.
class Vocabulary {
 public:
  Vocabulary();

  static Vocabulary build(std::span<const std::string> lines, std::size_t min_count = 1);
  static Vocabulary from_tokens(std::vector<std::string> tokens);
  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<TokenId> encode(std::string_view sentence) const;
  std::string decode(std::span<const TokenId> ids) const;

 private:
  void index();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

// Sentences as id sequences, each terminated by EOS. Blank lines are skipped.
std::vector<std::vector<TokenId>> encode_lm_corpus(std::span<const std::string> lines, const Vocabulary& vocab);
std::vector<std::vector<TokenId>> load_lm_corpus(const std::string& path, const Vocabulary& vocab);

enum class Number { singular, plural };

std::string_view to_string(Number n);
std::optional<Number> parse_number(std::string_view text);

// One row of the classification TSV: prefix \t SG|PL \t n_attractors [\t verb].
// The optional verb column is the form that actually follows the prefix; it
// is what LM-based agreement evaluation compares against its opposite.
struct AgreementRow {
  std::string prefix;
  Number label = Number::singular;
  std::size_t n_attractors = 0;
  std::string verb;
};

struct ClassificationExample {
  std::vector<TokenId> prefix;
  Number label = Number::singular;
  std::size_t n_attractors = 0;
  std::string verb;
};

std::vector<AgreementRow> parse_cls_rows(std::span<const std::string> lines);
std::vector<AgreementRow> load_cls_rows(const std::string& path);
void write_cls_rows(const std::string& path, std::span<const AgreementRow> rows);
std::vector<ClassificationExample> encode_cls_rows(std::span<const AgreementRow> rows, const Vocabulary& vocab);
std::vector<ClassificationExample> load_cls_dataset(const std::string& path, const Vocabulary& vocab);

// Verb form -> (opposite-number form, number). Always involutive.
class InflectionLexicon {
 public:
  void add(const std::string& form, const std::string& opposite, Number number);
  static InflectionLexicon load(const std::string& path);
  void save(const std::string& path) const;

  std::optional<std::string> opposite(std::string_view form) const;
  std::optional<Number> number(std::string_view form) const;
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::string opposite;
    Number number;
  };
  std::map<std::string, Entry, std::less<>> entries_;
};

struct SyntheticCorpus {
  std::vector<std::string> lm_lines;
  std::vector<AgreementRow> examples;
  InflectionLexicon lexicon;
};

// Sentences "the N (P the N){a} V [the N]" from a fixed grammar: a is uniform
// on 0..max_attractors, and the verb agrees with the subject only.
SyntheticCorpus gen_synthetic_agreement(std::uint64_t seed, std::size_t n, std::size_t max_attractors);

// The fixed lexicon of the synthetic grammar.
InflectionLexicon synthetic_lexicon();

// Lower-cases the first character of the first word.
std::string decapitalize_first(std::string_view sentence);

}  // namespace stackrnn::corpus
