#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stackrnn/controller.hpp"

namespace stackrnn::parsing {

// Unlabeled binary constituency tree over token positions 0..n-1.
class ParseNode {
 public:
  static ParseNode leaf(std::size_t index);
  static ParseNode branch(ParseNode left, ParseNode right);

  bool is_leaf() const { return !left_; }
  std::size_t index() const { return index_; }
  const ParseNode& left() const { return *left_; }
  const ParseNode& right() const { return *right_; }

  std::size_t leaf_count() const { return leaves_; }
  // Leaf indices in order.
  std::vector<std::size_t> leaves() const;
  // True when the in-order leaves are exactly 0..n-1.
  bool is_valid() const;

  friend bool operator==(const ParseNode& a, const ParseNode& b);

 private:
  ParseNode() = default;

  std::size_t index_ = 0;
  std::size_t leaves_ = 1;
  std::shared_ptr<const ParseNode> left_;
  std::shared_ptr<const ParseNode> right_;
};

// Per-token syntactic distances. Entry t relates token t to token t-1, so
// entry 0 is a sentinel (-inf) and never chosen as a split point.
using DistanceSequence = std::vector<double>;

// u1 models: distance[t] = push strength at t. d1 models: distance[t+1] =
// pop strength at t.
DistanceSequence distances_from_trace(std::span<const StepTrace> traces, std::string_view preset);

// Greedy top-down split at the largest distance (leftmost on ties).
ParseNode make_tree(std::span<const std::string> words, std::span<const double> distances);
ParseNode make_tree(std::size_t n, std::span<const double> distances);

ParseNode right_branching(std::size_t n);
ParseNode left_branching(std::size_t n);

enum class BracketStyle { round, square };

// "(a (b c))". A single leaf prints as the bare token.
std::string to_brackets(const ParseNode& tree, std::span<const std::string> words,
                        BracketStyle style = BracketStyle::round);

struct BracketedTree {
  ParseNode tree;
  std::vector<std::string> words;
};

// Accepts ( ) or [ ] delimiters. Unary wrappers are collapsed; nodes with more
// than two children are rejected.
BracketedTree from_brackets(std::string_view text);

struct Span {
  std::size_t start;
  std::size_t end;  // inclusive
  friend auto operator<=>(const Span&, const Span&) = default;
};

// Spans of internal nodes, without single words and the whole sentence.
std::vector<Span> constituent_spans(const ParseNode& tree);

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t matched = 0;
  std::size_t candidate_spans = 0;
  std::size_t gold_spans = 0;
};

F1Score unlabeled_f1(const ParseNode& candidate, const ParseNode& gold);

enum class F1Mode { macro, micro };

double corpus_f1(std::span<const ParseNode> candidates, std::span<const ParseNode> golds, F1Mode mode = F1Mode::macro);

}  // namespace stackrnn::parsing
