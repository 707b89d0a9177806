#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "stackrnn/autodiff.hpp"
#include "stackrnn/controller.hpp"
#include "stackrnn/corpus.hpp"

namespace stackrnn::training {

struct TrainConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 5;
  // Classifier early stopping: stop once validation loss has failed to
  // improve for more than `patience` consecutive epochs.
  std::size_t patience = 2;
  std::size_t batch_size = 1;
  // 0 means no step budget.
  std::size_t max_steps = 0;
  double clip_norm = 5.0;
  bool shuffle = true;
  std::uint64_t seed = 1;

  void validate() const;
};

// Per-example gradient work can run on an OpenMP team or on the calling
// thread. Both produce bitwise-identical results.
enum class Parallelism { serial, openmp };

class Adam {
 public:
  Adam(const ad::ParameterSet& params, const TrainConfig& config);

  void step(ad::ParameterSet& params, const ad::Gradients& grads);
  std::size_t steps() const { return steps_; }

 private:
  double learning_rate_;
  double beta1_;
  double beta2_;
  double epsilon_;
  std::size_t steps_ = 0;
  ad::Gradients m_;
  ad::Gradients v_;
};

// Rescales grads so their global norm is at most max_norm. Returns the norm
// before clipping.
double clip_global_norm(ad::Gradients& grads, double max_norm);

// Mean next-token NLL over an EOS-terminated sentence. The model reads EOS
// first, so every token including the final EOS is predicted.
ad::Var lm_loss(const StackRnn& model, ad::Graph& g, std::span<const TokenId> sentence);
// Softmax cross-entropy of the final step's class logits.
ad::Var classification_loss(const StackRnn& model, ad::Graph& g, const corpus::ClassificationExample& example);

double perplexity(double total_nll, std::size_t n_tokens);

struct SentenceScore {
  double nll = 0.0;
  std::size_t tokens = 0;
};
SentenceScore score_sentence(const StackRnn& model, std::span<const TokenId> sentence);

// Computes the mean loss over `count` examples and writes the mean gradient
// into `grads`. `loss_of(g, i)` builds the loss graph of example i.
using ExampleLoss = std::function<ad::Var(ad::Graph&, std::size_t)>;
double batch_gradients(const StackRnn& model, std::span<const std::size_t> examples, const ExampleLoss& loss_of,
                       ad::Gradients& grads, Parallelism parallelism = Parallelism::openmp);

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  double train_loss = 0.0;
  double valid_loss = std::numeric_limits<double>::quiet_NaN();
  // Perplexity for language models, accuracy for classifiers.
  double valid_metric = std::numeric_limits<double>::quiet_NaN();
  bool improved = false;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::size_t steps = 0;
  bool early_stopped = false;
  std::size_t best_epoch = 0;
};

void write_log_csv(std::ostream& out, const TrainLog& log);

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainLog train_lm(StackRnn& model, std::span<const std::vector<TokenId>> train,
                  std::span<const std::vector<TokenId>> valid, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Keeps the parameters of the best validation epoch.
TrainLog train_classifier(StackRnn& model, std::span<const corpus::ClassificationExample> train,
                          std::span<const corpus::ClassificationExample> valid, const TrainConfig& config,
                          const EpochCallback& on_epoch = {});

struct Bucket {
  std::size_t count = 0;
  std::size_t correct = 0;
  double accuracy() const { return count == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(count); }
};

inline constexpr std::size_t max_attractor_bucket = 5;

struct EvalReport {
  double perplexity = std::numeric_limits<double>::quiet_NaN();
  double total_nll = 0.0;
  std::size_t tokens = 0;
  Bucket overall;
  std::array<Bucket, max_attractor_bucket + 1> by_attractors{};
  std::size_t skipped = 0;
};

// Accuracy report CSV: bucket,count,correct,accuracy with rows overall, 0..5
// and skipped. Perplexity report CSV: metric,value.
void write_accuracy_csv(std::ostream& out, const EvalReport& report);
void write_perplexity_csv(std::ostream& out, const EvalReport& report);

EvalReport eval_perplexity(const StackRnn& model, std::span<const std::vector<TokenId>> corpus,
                           Parallelism parallelism = Parallelism::openmp);

using ClassPredictor = std::function<corpus::Number(const corpus::ClassificationExample&)>;
ClassPredictor classifier_predictor(const StackRnn& model);
EvalReport eval_classifier(const ClassPredictor& predict, std::span<const corpus::ClassificationExample> dataset,
                           Parallelism parallelism = Parallelism::openmp);
EvalReport eval_classifier(const StackRnn& model, std::span<const corpus::ClassificationExample> dataset,
                           Parallelism parallelism = Parallelism::openmp);
// Mean cross-entropy of the model's class logits.
double classifier_loss(const StackRnn& model, std::span<const corpus::ClassificationExample> dataset,
                       Parallelism parallelism = Parallelism::openmp);

// Scores for every vocabulary entry as the token following `prefix`; only
// their order matters.
using NextTokenScorer = std::function<std::vector<double>(std::span<const TokenId> prefix)>;
NextTokenScorer lm_scorer(const StackRnn& model);
// Correct iff the verb with the right number scores strictly higher than its
// opposite form. Items whose verb or opposite is unknown are skipped.
EvalReport eval_agreement_lm(const NextTokenScorer& scorer, std::span<const corpus::ClassificationExample> examples,
                             const corpus::InflectionLexicon& lexicon, const corpus::Vocabulary& vocab,
                             Parallelism parallelism = Parallelism::openmp);

}  // namespace stackrnn::training
