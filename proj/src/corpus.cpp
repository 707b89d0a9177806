#include "stackrnn/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>

#include "stackrnn/error.hpp"

namespace stackrnn::corpus {

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw data_error("cannot open " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(f, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const std::string& path, std::span<const std::string> lines) {
  std::ofstream f(path);
  if (!f) throw data_error("cannot write " + path);
  for (const auto& l : lines) f << l << '\n';
  if (!f) throw data_error("failed writing " + path);
}

Vocabulary::Vocabulary() {
  tokens_ = {std::string(pad_token), std::string(unk_token), std::string(eos_token)};
  index();
}

void Vocabulary::index() {
  ids_.clear();
  for (TokenId i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], i).second) throw data_error("duplicate vocabulary entry: " + tokens_[i]);
  }
}

Vocabulary Vocabulary::build(std::span<const std::string> lines, std::size_t min_count) {
  if (min_count < 1) throw usage_error("build_vocab: min_count must be at least 1");
  std::unordered_map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& line : lines) {
    for (auto& tok : tokenize(line)) {
      ++counts[tok];
      ++total;
    }
  }
  if (total == 0) throw data_error("build_vocab: corpus contains no tokens");
  std::vector<std::pair<std::string, std::size_t>> sorted;
  for (auto& [tok, c] : counts) {
    if (c < min_count) continue;
    if (tok == pad_token || tok == unk_token || tok == eos_token) continue;
    sorted.emplace_back(tok, c);
  }
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (auto& [tok, c] : sorted) v.tokens_.push_back(tok);
  v.index();
  return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 3 || tokens[pad_id] != pad_token || tokens[unk_id] != unk_token ||
      tokens[eos_id] != eos_token) {
    throw data_error("vocabulary must start with the reserved tokens <pad> <unk> <eos>");
  }
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.index();
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
  auto lines = read_lines(path);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return from_tokens(std::move(lines));
}

void Vocabulary::save(const std::string& path) const { write_lines(path, tokens_); }

bool Vocabulary::contains(std::string_view token) const { return ids_.count(std::string(token)) > 0; }

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? unk_id : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw usage_error("token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::vector<TokenId> Vocabulary::encode(std::string_view sentence) const {
  std::vector<TokenId> out;
  for (const auto& t : tokenize(sentence)) out.push_back(id(t));
  return out;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back(' ');
    out += token(ids[i]);
  }
  return out;
}

std::vector<std::vector<TokenId>> encode_lm_corpus(std::span<const std::string> lines, const Vocabulary& vocab) {
  std::vector<std::vector<TokenId>> out;
  for (const auto& line : lines) {
    auto ids = vocab.encode(line);
    if (ids.empty()) continue;
    ids.push_back(eos_id);
    out.push_back(std::move(ids));
  }
  return out;
}

std::vector<std::vector<TokenId>> load_lm_corpus(const std::string& path, const Vocabulary& vocab) {
  return encode_lm_corpus(read_lines(path), vocab);
}

std::string_view to_string(Number n) { return n == Number::singular ? "SG" : "PL"; }

std::optional<Number> parse_number(std::string_view text) {
  if (text == "SG") return Number::singular;
  if (text == "PL") return Number::plural;
  return std::nullopt;
}

namespace {
std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}
}  // namespace

std::vector<AgreementRow> parse_cls_rows(std::span<const std::string> lines) {
  std::vector<AgreementRow> rows;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string& line = lines[n];
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(n + 1) + ": ";
    auto cols = split_tabs(line);
    if (cols.size() != 3 && cols.size() != 4) {
      throw data_error(where + "expected 3 or 4 tab-separated columns, got " + std::to_string(cols.size()));
    }
    AgreementRow row;
    row.prefix = cols[0];
    if (tokenize(row.prefix).empty()) throw data_error(where + "empty prefix");
    auto label = parse_number(cols[1]);
    if (!label) throw data_error(where + "label must be SG or PL, got '" + cols[1] + "'");
    row.label = *label;
    const std::string& count = cols[2];
    if (count.empty() || !std::all_of(count.begin(), count.end(), [](unsigned char c) { return std::isdigit(c); })) {
      throw data_error(where + "attractor count must be a non-negative integer, got '" + count + "'");
    }
    row.n_attractors = static_cast<std::size_t>(std::stoull(count));
    if (cols.size() == 4) row.verb = cols[3];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<AgreementRow> load_cls_rows(const std::string& path) {
  try {
    return parse_cls_rows(read_lines(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::data) throw data_error(path + ": " + e.what());
    throw;
  }
}

void write_cls_rows(const std::string& path, std::span<const AgreementRow> rows) {
  std::vector<std::string> lines;
  lines.reserve(rows.size());
  for (const auto& r : rows) {
    std::string line = r.prefix + '\t' + std::string(to_string(r.label)) + '\t' + std::to_string(r.n_attractors);
    if (!r.verb.empty()) line += '\t' + r.verb;
    lines.push_back(std::move(line));
  }
  write_lines(path, lines);
}

std::vector<ClassificationExample> encode_cls_rows(std::span<const AgreementRow> rows, const Vocabulary& vocab) {
  std::vector<ClassificationExample> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({vocab.encode(r.prefix), r.label, r.n_attractors, r.verb});
  return out;
}

std::vector<ClassificationExample> load_cls_dataset(const std::string& path, const Vocabulary& vocab) {
  const auto rows = load_cls_rows(path);
  return encode_cls_rows(rows, vocab);
}

void InflectionLexicon::add(const std::string& form, const std::string& opposite, Number number) {
  if (form == opposite) throw data_error("lexicon: form and opposite are identical: " + form);
  const Number other = number == Number::singular ? Number::plural : Number::singular;
  auto check = [&](const std::string& w, const std::string& o, Number num) {
    auto it = entries_.find(w);
    if (it != entries_.end() && (it->second.opposite != o || it->second.number != num)) {
      throw data_error("lexicon: conflicting entries for " + w);
    }
  };
  check(form, opposite, number);
  check(opposite, form, other);
  entries_[form] = {opposite, number};
  entries_[opposite] = {form, other};
}

InflectionLexicon InflectionLexicon::load(const std::string& path) {
  InflectionLexicon lex;
  const auto lines = read_lines(path);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    auto cols = split_tabs(lines[n]);
    auto num = cols.size() == 3 ? parse_number(cols[2]) : std::nullopt;
    if (!num || cols[0].empty() || cols[1].empty()) {
      throw data_error(path + ": line " + std::to_string(n + 1) + ": expected form \\t opposite \\t SG|PL");
    }
    try {
      lex.add(cols[0], cols[1], *num);
    } catch (const Error& e) {
      throw data_error(path + ": line " + std::to_string(n + 1) + ": " + e.what());
    }
  }
  return lex;
}

void InflectionLexicon::save(const std::string& path) const {
  std::vector<std::string> lines;
  for (const auto& [form, e] : entries_) lines.push_back(form + '\t' + e.opposite + '\t' + std::string(to_string(e.number)));
  write_lines(path, lines);
}

std::optional<std::string> InflectionLexicon::opposite(std::string_view form) const {
  auto it = entries_.find(form);
  if (it == entries_.end()) return std::nullopt;
  return it->second.opposite;
}

std::optional<Number> InflectionLexicon::number(std::string_view form) const {
  auto it = entries_.find(form);
  if (it == entries_.end()) return std::nullopt;
  return it->second.number;
}

namespace {

struct Pair {
  const char* singular;
  const char* plural;
};

constexpr Pair nouns[] = {{"cat", "cats"},   {"dog", "dogs"},     {"bird", "birds"}, {"boat", "boats"},
                          {"tree", "trees"}, {"house", "houses"}, {"car", "cars"},   {"girl", "girls"},
                          {"boy", "boys"},   {"friend", "friends"}};
constexpr const char* prepositions[] = {"near", "on", "behind", "with", "by", "under"};
constexpr Pair intransitive[] = {{"sleeps", "sleep"}, {"runs", "run"}, {"purrs", "purr"}, {"waits", "wait"}};
constexpr Pair transitive[] = {{"sees", "see"}, {"likes", "like"}, {"chases", "chase"}, {"finds", "find"}};

template <class T, std::size_t N>
const T& pick(const T (&items)[N], std::mt19937_64& rng) {
  return items[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng)];
}

const char* form(const Pair& p, Number n) { return n == Number::singular ? p.singular : p.plural; }

}  // namespace

InflectionLexicon synthetic_lexicon() {
  InflectionLexicon lex;
  for (const auto& v : intransitive) lex.add(v.singular, v.plural, Number::singular);
  for (const auto& v : transitive) lex.add(v.singular, v.plural, Number::singular);
  return lex;
}

SyntheticCorpus gen_synthetic_agreement(std::uint64_t seed, std::size_t n, std::size_t max_attractors) {
  if (n < 1) throw usage_error("gen_synthetic_agreement: n must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> attractors(0, max_attractors);
  std::bernoulli_distribution coin(0.5);
  auto number = [&] { return coin(rng) ? Number::plural : Number::singular; };

  SyntheticCorpus out;
  out.lexicon = synthetic_lexicon();
  for (std::size_t i = 0; i < n; ++i) {
    const Number subject = number();
    std::string prefix = std::string("the ") + form(pick(nouns, rng), subject);
    const std::size_t a = attractors(rng);
    for (std::size_t j = 0; j < a; ++j) {
      prefix += std::string(" ") + pick(prepositions, rng) + " the " + form(pick(nouns, rng), number());
    }
    const bool is_transitive = coin(rng);
    const Pair& verb = is_transitive ? pick(transitive, rng) : pick(intransitive, rng);
    std::string sentence = prefix + " " + form(verb, subject);
    if (is_transitive) sentence += std::string(" the ") + form(pick(nouns, rng), number());
    out.lm_lines.push_back(sentence);
    out.examples.push_back({prefix, subject, a, form(verb, subject)});
  }
  return out;
}

std::string decapitalize_first(std::string_view sentence) {
  std::string out(sentence);
  for (char& ch : out) {
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    break;
  }
  return out;
}

}  // namespace stackrnn::corpus
