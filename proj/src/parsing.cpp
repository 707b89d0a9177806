#include "stackrnn/parsing.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "stackrnn/error.hpp"

namespace stackrnn::parsing {

ParseNode ParseNode::leaf(std::size_t index) {
  ParseNode n;
  n.index_ = index;
  return n;
}

ParseNode ParseNode::branch(ParseNode left, ParseNode right) {
  ParseNode n;
  n.leaves_ = left.leaves_ + right.leaves_;
  n.left_ = std::make_shared<const ParseNode>(std::move(left));
  n.right_ = std::make_shared<const ParseNode>(std::move(right));
  return n;
}

std::vector<std::size_t> ParseNode::leaves() const {
  std::vector<std::size_t> out;
  out.reserve(leaves_);
  std::vector<const ParseNode*> pending{this};
  while (!pending.empty()) {
    const ParseNode* n = pending.back();
    pending.pop_back();
    if (n->is_leaf()) {
      out.push_back(n->index_);
    } else {
      pending.push_back(n->right_.get());
      pending.push_back(n->left_.get());
    }
  }
  return out;
}

bool ParseNode::is_valid() const {
  const auto l = leaves();
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (l[i] != i) return false;
  }
  return true;
}

bool operator==(const ParseNode& a, const ParseNode& b) {
  if (a.is_leaf() != b.is_leaf()) return false;
  if (a.is_leaf()) return a.index_ == b.index_;
  return a.leaves_ == b.leaves_ && *a.left_ == *b.left_ && *a.right_ == *b.right_;
}

DistanceSequence distances_from_trace(std::span<const StepTrace> traces, std::string_view preset) {
  const double sentinel = -std::numeric_limits<double>::infinity();
  DistanceSequence d(traces.size(), sentinel);
  if (preset == "u1") {
    for (std::size_t t = 1; t < traces.size(); ++t) d[t] = traces[t].push;
  } else if (preset == "d1") {
    for (std::size_t t = 0; t + 1 < traces.size(); ++t) d[t + 1] = traces[t].pop;
  } else {
    throw usage_error("no distance rule for preset '" + std::string(preset) + "' (expected u1 or d1)");
  }
  return d;
}

namespace {

ParseNode split(std::size_t lo, std::size_t hi, std::span<const double> d) {
  if (hi - lo == 1) return ParseNode::leaf(lo);
  std::size_t best = lo == 0 ? 1 : lo;
  for (std::size_t j = best + 1; j < hi; ++j) {
    if (d[j] > d[best]) best = j;
  }
  const bool has_left = best > lo;
  const bool has_right = best + 1 < hi;
  if (has_left && has_right) {
    return ParseNode::branch(split(lo, best, d), ParseNode::branch(ParseNode::leaf(best), split(best + 1, hi, d)));
  }
  if (!has_left) return ParseNode::branch(ParseNode::leaf(best), split(best + 1, hi, d));
  return ParseNode::branch(split(lo, best, d), ParseNode::leaf(best));
}

}  // namespace

ParseNode make_tree(std::size_t n, std::span<const double> distances) {
  if (n == 0) throw usage_error("make_tree: empty sentence");
  if (distances.size() != n) {
    throw usage_error("make_tree: " + std::to_string(n) + " words but " + std::to_string(distances.size()) +
                      " distances");
  }
  for (std::size_t j = 1; j < n; ++j) {
    if (!std::isfinite(distances[j])) throw usage_error("make_tree: non-finite distance at " + std::to_string(j));
  }
  return split(0, n, distances);
}

ParseNode make_tree(std::span<const std::string> words, std::span<const double> distances) {
  return make_tree(words.size(), distances);
}

ParseNode right_branching(std::size_t n) {
  if (n == 0) throw usage_error("right_branching: empty sentence");
  ParseNode t = ParseNode::leaf(n - 1);
  for (std::size_t i = n - 1; i-- > 0;) t = ParseNode::branch(ParseNode::leaf(i), std::move(t));
  return t;
}

ParseNode left_branching(std::size_t n) {
  if (n == 0) throw usage_error("left_branching: empty sentence");
  ParseNode t = ParseNode::leaf(0);
  for (std::size_t i = 1; i < n; ++i) t = ParseNode::branch(std::move(t), ParseNode::leaf(i));
  return t;
}

namespace {

void emit(const ParseNode& n, std::span<const std::string> words, BracketStyle style, std::string& out) {
  if (n.is_leaf()) {
    out += words[n.index()];
    return;
  }
  out.push_back(style == BracketStyle::round ? '(' : '[');
  emit(n.left(), words, style, out);
  out.push_back(' ');
  emit(n.right(), words, style, out);
  out.push_back(style == BracketStyle::round ? ')' : ']');
}

bool is_bracket(char c) { return c == '(' || c == ')' || c == '[' || c == ']'; }

class BracketParser {
 public:
  explicit BracketParser(std::string_view text) : text_(text) {}

  BracketedTree parse() {
    skip_space();
    if (pos_ == text_.size()) throw data_error("brackets: empty input");
    ParseNode tree = node();
    skip_space();
    if (pos_ != text_.size()) fail("trailing input");
    return {std::move(tree), std::move(words_)};
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw data_error("brackets: " + what + " at offset " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  ParseNode node() {
    skip_space();
    if (pos_ == text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == ')' || c == ']') fail("unexpected closing bracket");
    if (c == '(' || c == '[') {
      const char close = c == '(' ? ')' : ']';
      ++pos_;
      std::vector<ParseNode> children;
      while (true) {
        skip_space();
        if (pos_ == text_.size()) fail("missing closing bracket");
        if (text_[pos_] == ')' || text_[pos_] == ']') {
          if (text_[pos_] != close) fail("mismatched closing bracket");
          ++pos_;
          break;
        }
        children.push_back(node());
      }
      if (children.empty()) fail("empty constituent");
      if (children.size() > 2) fail("constituent with " + std::to_string(children.size()) + " children");
      if (children.size() == 1) return std::move(children[0]);
      return ParseNode::branch(std::move(children[0]), std::move(children[1]));
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && !is_bracket(text_[pos_])) {
      ++pos_;
    }
    words_.emplace_back(text_.substr(start, pos_ - start));
    return ParseNode::leaf(words_.size() - 1);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<std::string> words_;
};

void collect_spans(const ParseNode& n, std::size_t start, bool root, std::vector<Span>& out) {
  if (n.is_leaf()) return;
  if (!root) out.push_back({start, start + n.leaf_count() - 1});
  collect_spans(n.left(), start, false, out);
  collect_spans(n.right(), start + n.left().leaf_count(), false, out);
}

}  // namespace

std::string to_brackets(const ParseNode& tree, std::span<const std::string> words, BracketStyle style) {
  if (words.size() != tree.leaf_count()) {
    throw usage_error("to_brackets: tree has " + std::to_string(tree.leaf_count()) + " leaves but " +
                      std::to_string(words.size()) + " words given");
  }
  std::string out;
  emit(tree, words, style, out);
  return out;
}

BracketedTree from_brackets(std::string_view text) { return BracketParser(text).parse(); }

std::vector<Span> constituent_spans(const ParseNode& tree) {
  std::vector<Span> out;
  collect_spans(tree, 0, true, out);
  std::sort(out.begin(), out.end());
  return out;
}

F1Score unlabeled_f1(const ParseNode& candidate, const ParseNode& gold) {
  if (candidate.leaf_count() != gold.leaf_count()) {
    throw usage_error("unlabeled_f1: candidate has " + std::to_string(candidate.leaf_count()) +
                      " leaves, gold has " + std::to_string(gold.leaf_count()));
  }
  const auto c = constituent_spans(candidate);
  const auto g = constituent_spans(gold);
  std::vector<Span> common;
  std::set_intersection(c.begin(), c.end(), g.begin(), g.end(), std::back_inserter(common));
  F1Score s;
  s.matched = common.size();
  s.candidate_spans = c.size();
  s.gold_spans = g.size();
  if (c.empty() && g.empty()) {
    s.precision = s.recall = s.f1 = 1.0;
    return s;
  }
  s.precision = c.empty() ? 0.0 : static_cast<double>(s.matched) / static_cast<double>(c.size());
  s.recall = g.empty() ? 0.0 : static_cast<double>(s.matched) / static_cast<double>(g.size());
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

double corpus_f1(std::span<const ParseNode> candidates, std::span<const ParseNode> golds, F1Mode mode) {
  if (candidates.size() != golds.size()) {
    throw usage_error("corpus_f1: " + std::to_string(candidates.size()) + " candidates vs " +
                      std::to_string(golds.size()) + " gold trees");
  }
  if (candidates.empty()) throw usage_error("corpus_f1: no trees");
  if (mode == F1Mode::macro) {
    double total = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) total += unlabeled_f1(candidates[i], golds[i]).f1;
    return total / static_cast<double>(candidates.size());
  }
  std::size_t matched = 0;
  std::size_t cand = 0;
  std::size_t gold = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const F1Score s = unlabeled_f1(candidates[i], golds[i]);
    matched += s.matched;
    cand += s.candidate_spans;
    gold += s.gold_spans;
  }
  if (cand == 0 && gold == 0) return 1.0;
  const double p = cand == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(cand);
  const double r = gold == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(gold);
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

}  // namespace stackrnn::parsing
