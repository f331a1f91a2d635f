#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "aboots/autodiff/parameters.hpp"
#include "aboots/corpus/dataset.hpp"
#include "aboots/corpus/vocabulary.hpp"
#include "aboots/model/hred.hpp"
#include "aboots/train/config.hpp"

namespace aboots::train {

using corpus::DialogueExample;

struct StepDiagnostics {
  std::size_t examples = 0;
  // Samples that entered the discriminator loss, one entry per example.
  std::vector<std::size_t> discriminator_samples;
  std::size_t target_tokens = 0;
  double tf_nll_per_token = 0.0;
  double mean_q_truth = 0.0;
  double mean_q_argmax = 0.0;
  double mean_q_distractor = 0.0;
  double mean_q_sample = 0.0;
  double mean_bootstrap_target = 0.0;
  double generator_grad_norm = 0.0;      // before clipping
  double discriminator_grad_norm = 0.0;  // before clipping
  bool discriminator_updated = false;
};

// Batch-mean losses and gradients of one joint step, before any update.
// `generator` holds only generator-group parameters (the encoder and the
// embeddings included); `discriminator` only discriminator-group ones.
struct StepGradients {
  double generator_loss = 0.0;
  double discriminator_loss = 0.0;
  ad::Gradients generator;
  ad::Gradients discriminator;
  StepDiagnostics diagnostics;
};

// Per-example randomness derives from (step_seed, example index), so a step
// is reproducible from the seed alone.
StepGradients compute_step_gradients(const model::HredModel& model, const ad::ParameterSet& params,
                                     const TrainingConfig& config, std::span<const DialogueExample> batch,
                                     std::uint64_t step_seed);

// Global-norm clip then SGD. Returns the norm before clipping.
double apply_update(ad::ParameterSet& params, ad::Gradients gradients, double lr, double clip);

struct StepResult {
  double generator_loss = 0.0;
  double discriminator_loss = 0.0;
  StepDiagnostics diagnostics;
};

// One simultaneous generator + discriminator update on the same batch.
StepResult train_step(const model::HredModel& model, ad::ParameterSet& params, const TrainingConfig& config,
                      std::span<const DialogueExample> batch, std::uint64_t step_seed, double lr);

// lr * decay when the last three generator losses rose twice in a row,
// otherwise lr. `recent` is ordered oldest first.
double lr_schedule(std::span<const double> recent, double lr, double decay);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

struct RunState {
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  std::uint64_t batch_index = 0;  // next batch within the epoch
  double lr = 0.5;
  std::vector<double> recent_losses;  // up to the two latest generator losses
  std::uint64_t seed = 1;

  friend bool operator==(const RunState&, const RunState&) = default;
};

struct Checkpoint {
  TrainingConfig config;
  corpus::Vocabulary vocab;
  ad::ParameterSet params;
  RunState state;
};

// Directory with config.txt, vocab.txt, params.bin and state.txt.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& dir);
// Parameters are validated against the model the config describes; a
// mismatch raises CheckpointError.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// Corpus directory: train.txt (+ optional valid.txt, test.txt), or a single
// corpus.txt that is split 90/5/5 under `seed`.
struct DataSplits {
  std::vector<corpus::Conversation> train, valid, test;
};
DataSplits load_data(const std::filesystem::path& dir, std::uint64_t seed);
const std::vector<corpus::Conversation>& select_split(const DataSplits& data, std::string_view name);

struct MetricsRow {
  std::uint64_t step = 0;
  double generator_loss = 0.0;
  double discriminator_loss = 0.0;
  double lr = 0.0;
  std::optional<double> val_bleu2;
};

// CSV header `step,gen_loss,disc_loss,lr,val_bleu2`.
void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& row);

// A training run in progress: model, parameters, run state and the
// tokenized datasets.
class Trainer {
 public:
  Trainer(TrainingConfig config, const DataSplits& data);
  Trainer(Checkpoint checkpoint, const DataSplits& data);

  const TrainingConfig& config() const noexcept { return checkpoint_.config; }
  const corpus::Vocabulary& vocab() const noexcept { return checkpoint_.vocab; }
  const model::HredModel& model() const noexcept { return model_; }
  const ad::ParameterSet& params() const noexcept { return checkpoint_.params; }
  ad::ParameterSet& params() noexcept { return checkpoint_.params; }
  const RunState& state() const noexcept { return checkpoint_.state; }
  const std::vector<DialogueExample>& train_examples() const noexcept { return train_; }
  const std::vector<DialogueExample>& valid_examples() const noexcept { return valid_; }

  bool finished() const;
  // Runs the next batch and advances the run state; nullopt once finished.
  std::optional<StepResult> step();
  // Greedy-decode BLEU-2 on the validation set (nullopt when it is empty).
  std::optional<double> validate() const;

  void save(const std::filesystem::path& dir) const { save_checkpoint(checkpoint_, dir); }

  using StepCallback = std::function<void(const StepResult&, const MetricsRow&)>;
  // Steps until finished, writing metrics rows (every log_every steps) and
  // checkpoints under `out_dir`; returns the rows written.
  std::vector<MetricsRow> run(const std::filesystem::path& out_dir, const StepCallback& on_step = {});

 private:
  const std::vector<std::vector<DialogueExample>>& epoch_batches(std::uint64_t epoch) const;

  Checkpoint checkpoint_;
  model::HredModel model_;
  std::vector<DialogueExample> train_;
  std::vector<DialogueExample> valid_;
  mutable std::optional<std::uint64_t> cached_epoch_;
  mutable std::vector<std::vector<DialogueExample>> cached_batches_;
};

struct RunSummary {
  std::filesystem::path final_checkpoint;
  std::vector<MetricsRow> rows;
};

// Fresh run: metrics.csv, checkpoints/step-N/ and final/ under `out_dir`.
RunSummary run_training(const TrainingConfig& config, const std::filesystem::path& data_dir,
                        const std::filesystem::path& out_dir);
// Continues from a checkpoint; `max_steps` overrides the stored budget when set.
RunSummary resume_training(const std::filesystem::path& checkpoint_dir, const std::filesystem::path& data_dir,
                           const std::filesystem::path& out_dir, std::optional<std::size_t> max_steps = {});

}  // namespace aboots::train
