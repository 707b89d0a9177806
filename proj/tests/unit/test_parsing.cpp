#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "stackrnn/error.hpp"
#include "stackrnn/parsing.hpp"

using namespace stackrnn;
using namespace stackrnn::parsing;

namespace {

constexpr double sentinel = -std::numeric_limits<double>::infinity();

std::vector<std::string> letters(std::size_t n) {
  std::vector<std::string> w;
  for (std::size_t i = 0; i < n; ++i) w.push_back("w" + std::to_string(i));
  return w;
}

// Direct transcription of the greedy split over sub-slices of the word list,
// building the bracket string without going through ParseNode.
std::string reference_tree(const std::vector<std::string>& words, const std::vector<double>& d, std::size_t lo,
                           std::size_t hi) {
  if (hi - lo == 1) return words[lo];
  std::vector<std::pair<double, std::size_t>> candidates;
  for (std::size_t j = lo; j < hi; ++j) {
    if (j != 0) candidates.push_back({-d[j], j});
  }
  const std::size_t i = std::min_element(candidates.begin(), candidates.end())->second;
  const bool has_left = i > lo;
  const bool has_right = i + 1 < hi;
  const std::string head = words[i];
  if (!has_left) return "(" + head + " " + reference_tree(words, d, i + 1, hi) + ")";
  const std::string left = reference_tree(words, d, lo, i);
  if (!has_right) return "(" + left + " " + head + ")";
  return "(" + left + " (" + head + " " + reference_tree(words, d, i + 1, hi) + "))";
}

std::string strip_spaces(std::string s) {
  s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
  return s;
}

ParseNode random_tree(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return ParseNode::leaf(lo);
  std::uniform_int_distribution<std::size_t> split(lo + 1, hi - 1);
  const std::size_t m = split(rng);
  return ParseNode::branch(random_tree(rng, lo, m), random_tree(rng, m, hi));
}

ParseNode tree_of(const std::string& brackets) { return from_brackets(brackets).tree; }

}  // namespace

TEST_CASE("make_tree hand examples") {
  const std::vector<std::string> w{"a", "b", "c"};
  CHECK(to_brackets(make_tree(w, std::vector<double>{sentinel, 5, 1}), w) == "(a (b c))");
  CHECK(to_brackets(make_tree(w, std::vector<double>{sentinel, 1, 5}), w) == "((a b) c)");
  const std::vector<std::string> w4{"a", "b", "c", "d"};
  CHECK(to_brackets(make_tree(w4, std::vector<double>{0, 1, 1, 1}), w4) == "(a (b (c d)))");
  // The value at position 0 is never a split point, whatever it holds.
  CHECK(to_brackets(make_tree(w, std::vector<double>{99, 1, 5}), w) == "((a b) c)");
  CHECK(make_tree(1, std::vector<double>{sentinel}).is_leaf());
}

TEST_CASE("make_tree input validation") {
  const std::vector<std::string> w{"a", "b"};
  CHECK_THROWS_AS(make_tree(w, std::vector<double>{0}), Error);
  CHECK_THROWS_AS(make_tree(0, std::vector<double>{}), Error);
  CHECK_THROWS_AS(make_tree(w, std::vector<double>{0, std::nan("")}), Error);
}

TEST_CASE("make_tree agrees with the slice-based reference on random inputs") {
  std::mt19937_64 rng(123);
  std::uniform_int_distribution<std::size_t> len(1, 50);
  std::uniform_int_distribution<int> small_int(0, 3);
  std::uniform_real_distribution<double> real(0.0, 4.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = len(rng);
    const auto words = letters(n);
    std::vector<double> d(n);
    d[0] = sentinel;
    const bool ties = trial % 2 == 0;
    for (std::size_t j = 1; j < n; ++j) d[j] = ties ? small_int(rng) : real(rng);
    const ParseNode t = make_tree(words, d);
    CHECK(t.is_valid());
    CHECK(t.leaf_count() == n);
    CHECK(to_brackets(t, words) == reference_tree(words, d, 0, n));
  }
}

TEST_CASE("monotone and equal distances") {
  for (std::size_t n = 1; n <= 50; ++n) {
    std::vector<double> equal(n, 2.0), inc(n), dec(n);
    for (std::size_t j = 0; j < n; ++j) {
      inc[j] = static_cast<double>(j);
      dec[j] = static_cast<double>(n - j);
    }
    CHECK(make_tree(n, equal) == right_branching(n));
    CHECK(make_tree(n, dec) == right_branching(n));
    CHECK(make_tree(n, inc) == left_branching(n));
  }
}

TEST_CASE("branching baselines") {
  const std::vector<std::string> w2{"a", "b"};
  const std::vector<std::string> w{"a", "b", "c"};
  CHECK(to_brackets(right_branching(2), w2) == "(a b)");
  CHECK(to_brackets(left_branching(2), w2) == "(a b)");
  CHECK(to_brackets(right_branching(3), w) == "(a (b c))");
  CHECK(to_brackets(left_branching(3), w) == "((a b) c)");
}

TEST_CASE("distances from traces") {
  std::vector<StepTrace> tr(3);
  tr[0].push = 0.46;
  tr[1].push = 2.6;
  tr[2].push = 0.9;
  tr[0].pop = 0.1;
  tr[1].pop = 0.2;
  tr[2].pop = 0.3;
  const auto u1 = distances_from_trace(tr, "u1");
  CHECK(std::isinf(u1[0]));
  CHECK(u1[0] < 0);
  CHECK(u1[1] == 2.6);
  CHECK(u1[2] == 0.9);
  const auto d1 = distances_from_trace(tr, "d1");
  CHECK(std::isinf(d1[0]));
  CHECK(d1[1] == 0.1);
  CHECK(d1[2] == 0.2);
  CHECK(distances_from_trace(std::span<const StepTrace>(tr.data(), 1), "u1").size() == 1);
  CHECK_THROWS_AS(distances_from_trace(tr, "lstm-baseline"), Error);
  CHECK_THROWS_AS(distances_from_trace(tr, "bogus"), Error);
}

TEST_CASE("bracket serialisation") {
  const std::vector<std::string> w{"solo"};
  CHECK(to_brackets(ParseNode::leaf(0), w) == "solo");

  for (const char* fig : {
           "[ [ The finger-pointing ] [ has [ [ already begun ] . ] ] ]",
           "[ [ [ [ The futures ] halt ] [ was [ even assailed ] ] ] [ by [ [ Big [ Board [ floor traders ] ] ] . ] ] ]",
           "[ [ CONCORDE [ trans-Atlantic flights ] ] [ are [ [ [ $ 2,400 ] [ to [ Paris [ and [ $ 3,200 ] ] ] ] ] [ to [ London . ] ] ] ] ]",
       }) {
    const auto parsed = from_brackets(fig);
    CHECK(parsed.tree.is_valid());
    CHECK(strip_spaces(to_brackets(parsed.tree, parsed.words, BracketStyle::square)) == strip_spaces(fig));
  }
  const auto first = from_brackets("[ [ The finger-pointing ] [ has [ [ already begun ] . ] ] ]");
  CHECK(first.words == std::vector<std::string>{"The", "finger-pointing", "has", "already", "begun", "."});
  CHECK(to_brackets(first.tree, first.words, BracketStyle::square) ==
        "[[The finger-pointing] [has [[already begun] .]]]");

  CHECK(tree_of("((a))") == tree_of("a"));
  for (const char* bad : {"(a b", "a b)", "(a b c)", "()", "", "(a [b c))", "(a b) c"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(from_brackets(bad), Error);
  }
}

TEST_CASE("unlabeled F1 hand cases") {
  const auto right = tree_of("(a (b c))");
  const auto left = tree_of("((a b) c)");
  const auto self = unlabeled_f1(right, right);
  CHECK(self.f1 == 1.0);
  CHECK(self.precision == 1.0);
  CHECK(self.recall == 1.0);
  const auto cross = unlabeled_f1(right, left);
  CHECK(cross.precision == 0.0);
  CHECK(cross.recall == 0.0);
  CHECK(cross.f1 == 0.0);
  CHECK(constituent_spans(right) == std::vector<Span>{{1, 2}});
  CHECK(constituent_spans(left) == std::vector<Span>{{0, 1}});

  // Two-word trees have no scorable spans at all.
  CHECK(unlabeled_f1(tree_of("(a b)"), tree_of("(a b)")).f1 == 1.0);

  const auto c = tree_of("((a b) (c d))");
  const auto g = tree_of("(a (b (c d)))");
  const auto s = unlabeled_f1(c, g);
  CHECK(s.matched == 1);
  CHECK(s.precision == 0.5);
  CHECK(s.recall == 0.5);
  const auto swapped = unlabeled_f1(tree_of("(((a b) c) d)"), g);
  const auto swapped_back = unlabeled_f1(g, tree_of("(((a b) c) d)"));
  CHECK(swapped.precision == swapped_back.recall);
  CHECK(swapped.recall == swapped_back.precision);

  CHECK_THROWS_AS(unlabeled_f1(right, tree_of("(a b)")), Error);
}

TEST_CASE("corpus F1 averaging") {
  const std::vector<ParseNode> cand{tree_of("((a b) (c d))"), tree_of("(a (b c))")};
  const std::vector<ParseNode> gold{tree_of("(a (b (c d)))"), tree_of("(a (b c))")};
  CHECK(corpus_f1(cand, gold, F1Mode::macro) == doctest::Approx(0.75));
  CHECK(corpus_f1(cand, gold, F1Mode::micro) == doctest::Approx(2.0 / 3.0));

  const std::vector<ParseNode> one_c{cand[0]}, one_g{gold[0]};
  CHECK(corpus_f1(one_c, one_g, F1Mode::macro) == unlabeled_f1(cand[0], gold[0]).f1);
  CHECK(corpus_f1(one_c, one_g, F1Mode::micro) == unlabeled_f1(cand[0], gold[0]).f1);

  const std::vector<ParseNode> mixed_c{tree_of("(a (b c))"), tree_of("(a (b c))")};
  const std::vector<ParseNode> mixed_g{tree_of("(a (b c))"), tree_of("((a b) c)")};
  CHECK(corpus_f1(mixed_c, mixed_g, F1Mode::macro) == 0.5);
}

TEST_CASE("self F1 is 1 and F1 stays in [0,1] on fuzzed trees") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> len(1, 40);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = len(rng);
    const auto a = random_tree(rng, 0, n);
    const auto b = random_tree(rng, 0, n);
    CHECK(a.is_valid());
    CHECK(unlabeled_f1(a, a).f1 == 1.0);
    const auto s = unlabeled_f1(a, b);
    CHECK(s.f1 >= 0.0);
    CHECK(s.f1 <= 1.0);
    const auto words = letters(n);
    CHECK(from_brackets(to_brackets(a, words)).tree == a);
  }
}
