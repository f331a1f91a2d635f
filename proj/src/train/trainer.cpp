#include "aboots/train/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "aboots/autodiff/checkpoint.hpp"
#include "aboots/autodiff/ops.hpp"
#include "aboots/autodiff/optim.hpp"
#include "aboots/corpus/batching.hpp"
#include "aboots/errors.hpp"
#include "aboots/objectives/objectives.hpp"
#include "aboots/policy/policy.hpp"
#include "aboots/train/evaluation.hpp"

namespace aboots::train {

namespace {

namespace fs = std::filesystem;
using objectives::SampleKind;
using objectives::SpecialCase;

// RNG stream tags.
constexpr std::uint64_t kInitStream = 0x1001;
constexpr std::uint64_t kEpochStream = 0x1002;
constexpr std::uint64_t kStepStream = 0x1003;
constexpr std::uint64_t kValidateStream = 0x1004;

model::ModelConfig model_config_for(const TrainingConfig& config, const corpus::Vocabulary& vocab) {
  model::ModelConfig m = config.model_config();
  m.vocab_size = vocab.size();
  return m;
}

// The argmax sequence up to and including its first </s>.
corpus::Sequence truncate_at_eos(const corpus::Sequence& ids) {
  corpus::Sequence out;
  for (corpus::TokenId t : ids) {
    out.push_back(t);
    if (t == corpus::kEos) break;
  }
  return out;
}

void accumulate(ad::Gradients& into, const ad::Graph& g, const ad::ParameterSet& params, ad::Group group) {
  for (const std::string& name : params.names(group)) {
    const ad::Tensor* grad = g.parameter_gradient(name);
    if (!grad) continue;
    auto it = into.find(name);
    if (it == into.end()) into.emplace(name, *grad);
    else it->second += *grad;
  }
}

void fill_missing(ad::Gradients& grads, const ad::ParameterSet& params, ad::Group group) {
  for (const std::string& name : params.names(group))
    if (!grads.contains(name)) grads.emplace(name, ad::Tensor(params.value(name).shape()));
}

[[noreturn]] void non_finite(const char* what, std::size_t example, const StepDiagnostics& d) {
  std::ostringstream msg;
  msg << what << " is not finite at batch example " << example << " (tf_nll_per_token so far "
      << d.tf_nll_per_token << ", grad norms " << d.generator_grad_norm << '/' << d.discriminator_grad_norm << ')';
  throw NonFiniteError(msg.str());
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

StepGradients compute_step_gradients(const model::HredModel& model, const ad::ParameterSet& params,
                                     const TrainingConfig& config, std::span<const DialogueExample> batch,
                                     std::uint64_t step_seed) {
  if (batch.empty()) throw EmptyInputError("empty batch");
  const objectives::Hyperparams hp = config.hyperparams();
  const objectives::SpecialCaseConfig special = objectives::make_special_case_config(config.mode, config.beta);
  const bool adversarial = config.mode == SpecialCase::none;
  const bool word = config.level == model::DiscriminationLevel::word;
  const policy::PolicyConfig pc = config.policy_config();
  const bool gaussian = pc.strategy == policy::Strategy::gaussian;
  const double word_coef = config.word_coefficient == objectives::WordCoefficient::alpha ? hp.alpha : 1.0 - hp.beta;

  StepGradients out;
  StepDiagnostics& d = out.diagnostics;
  d.examples = batch.size();
  d.discriminator_updated = adversarial;
  double nll = 0.0;

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const DialogueExample& ex = batch[b];
    ad::Rng rng(derive_seed(step_seed, kStepStream, b));
    ad::Graph g(params);
    const model::EncoderOutput enc = model.encode(g, ex.context);

    model::DecodeOptions tf_opt;
    tf_opt.mode = model::DecodeMode::teacher_forcing;
    tf_opt.ground_truth = ex.target;
    tf_opt.tau = hp.tau;
    const model::Decoding tf = model.generate(g, enc, tf_opt);
    for (const ad::Var& lp : tf.log_probs) nll -= lp.item();
    d.target_tokens += tf.log_probs.size();

    std::vector<objectives::GeneratorTerm> gen_terms;
    const double truth_weight = adversarial ? objectives::generator_target(SampleKind::ground_truth, 0.0, hp)
                                            : special.ground_truth_weight;
    gen_terms.push_back({tf.log_probs, {truth_weight}});

    const corpus::Sequence argmax_seq = truncate_at_eos(tf.argmax);
    if (config.mode == SpecialCase::hard_bootstrap) {
      std::vector<ad::Var> lps;
      for (std::size_t j = 0; j < argmax_seq.size(); ++j)
        lps.push_back(ad::log(ad::pick(tf.distributions[j], static_cast<std::size_t>(argmax_seq[j]))));
      gen_terms.push_back({std::move(lps), {special.argmax_weight}});
    }

    std::optional<ad::Var> surrogate;
    std::vector<objectives::DiscriminatorTerm> disc_terms;
    if (adversarial) {
      model::DiscriminatorOutput truth = model.discriminate(g, ex.target, enc.context);
      model::DiscriminatorOutput arg = model.discriminate(g, argmax_seq, enc.context);
      model::DiscriminatorOutput distractor = model.discriminate(g, ex.distractor, enc.context);

      corpus::Sequence sample_tokens;
      model::DiscriminatorOutput sample;
      if (gaussian) {
        const ad::Tensor noise = policy::sample_noise(model.config().h_dim, rng);
        policy::DeterministicPolicyResult det =
            policy::deterministic_policy_loss(g, model, enc, noise, word ? word_coef : hp.alpha, hp.tau);
        surrogate = det.surrogate;
        sample_tokens = det.decoding.tokens;
        sample = model.discriminate(g, sample_tokens, enc.context);
      } else {
        model::DecodeOptions opt;
        opt.mode = model::DecodeMode::sampled;
        opt.tau = hp.tau;
        opt.sampler = policy::make_sampler(pc);
        opt.rng = &rng;
        const model::Decoding dec = model.generate(g, enc, opt);
        sample_tokens = dec.tokens;
        sample = model.discriminate(g, sample_tokens, enc.context);
        std::vector<double> weights;
        if (word) {
          for (const ad::Var& s : sample.token_scores)
            weights.push_back(
                objectives::generator_target_word(SampleKind::policy_sample, s.item(), hp, config.word_coefficient));
        } else {
          weights.push_back(objectives::generator_target(SampleKind::policy_sample, sample.score.item(), hp));
        }
        gen_terms.push_back({dec.log_probs, std::move(weights)});
      }

      auto scores = [word](const model::DiscriminatorOutput& o) {
        return word ? o.token_scores : std::vector<ad::Var>{o.score};
      };
      disc_terms.push_back({scores(truth), objectives::discriminator_target(SampleKind::ground_truth, hp)});
      disc_terms.push_back({scores(arg), objectives::discriminator_target(SampleKind::tf_argmax, hp)});
      disc_terms.push_back({scores(distractor), objectives::discriminator_target(SampleKind::distractor, hp)});
      if (config.disc_bootstrap) {
        const double s = objectives::discriminator_bootstrap_target(sample.features.value(), truth.features.value());
        disc_terms.push_back({scores(sample), s});
        d.mean_bootstrap_target += s;
      }
      d.mean_q_truth += truth.score.item();
      d.mean_q_argmax += arg.score.item();
      d.mean_q_distractor += distractor.score.item();
      d.mean_q_sample += sample.score.item();
    }
    d.discriminator_samples.push_back(disc_terms.size());

    ad::Var gen_loss = objectives::generator_loss(g, gen_terms);
    if (surrogate) gen_loss = ad::add(gen_loss, *surrogate);
    if (!std::isfinite(gen_loss.item())) non_finite("generator loss", b, d);
    out.generator_loss += gen_loss.item();
    g.backward(gen_loss);
    accumulate(out.generator, g, params, ad::Group::generator);

    if (!disc_terms.empty()) {
      ad::Var disc_loss = objectives::discriminator_loss(g, disc_terms);
      if (!std::isfinite(disc_loss.item())) non_finite("discriminator loss", b, d);
      out.discriminator_loss += disc_loss.item();
      g.backward(disc_loss);
      accumulate(out.discriminator, g, params, ad::Group::discriminator);
    }
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  out.generator_loss *= inv;
  out.discriminator_loss *= inv;
  for (auto& [name, grad] : out.generator) grad *= inv;
  for (auto& [name, grad] : out.discriminator) grad *= inv;
  fill_missing(out.generator, params, ad::Group::generator);
  if (adversarial) fill_missing(out.discriminator, params, ad::Group::discriminator);
  d.tf_nll_per_token = d.target_tokens ? nll / static_cast<double>(d.target_tokens) : 0.0;
  d.mean_q_truth *= inv;
  d.mean_q_argmax *= inv;
  d.mean_q_distractor *= inv;
  d.mean_q_sample *= inv;
  d.mean_bootstrap_target *= inv;
  d.generator_grad_norm = ad::global_norm(out.generator);
  d.discriminator_grad_norm = ad::global_norm(out.discriminator);
  if (!std::isfinite(d.generator_grad_norm) || !std::isfinite(d.discriminator_grad_norm))
    non_finite("gradient norm", batch.size(), d);
  return out;
}

double apply_update(ad::ParameterSet& params, ad::Gradients gradients, double lr, double clip) {
  const double norm = ad::clip_gradients(gradients, clip);
  ad::sgd_step(params, gradients, lr);
  return norm;
}

StepResult train_step(const model::HredModel& model, ad::ParameterSet& params, const TrainingConfig& config,
                      std::span<const DialogueExample> batch, std::uint64_t step_seed, double lr) {
  StepGradients grads = compute_step_gradients(model, params, config, batch, step_seed);
  apply_update(params, std::move(grads.generator), lr, config.clip);
  if (grads.diagnostics.discriminator_updated) apply_update(params, std::move(grads.discriminator), lr, config.clip);
  return {grads.generator_loss, grads.discriminator_loss, std::move(grads.diagnostics)};
}

double lr_schedule(std::span<const double> recent, double lr, double decay) {
  if (recent.size() < 3) return lr;
  const std::size_t n = recent.size();
  return recent[n - 3] < recent[n - 2] && recent[n - 2] < recent[n - 1] ? lr * decay : lr;
}

// ---- checkpoints

namespace {

void write_state(const RunState& s, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  out << "step " << s.step << "\nepoch " << s.epoch << "\nbatch_index " << s.batch_index << "\nlr " << s.lr
      << "\nseed " << s.seed << "\nrecent_losses " << s.recent_losses.size();
  for (double l : s.recent_losses) out << ' ' << l;
  out << '\n';
}

RunState read_state(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open " + path.string());
  RunState s;
  std::string key;
  while (in >> key) {
    if (key == "step") in >> s.step;
    else if (key == "epoch") in >> s.epoch;
    else if (key == "batch_index") in >> s.batch_index;
    else if (key == "lr") in >> s.lr;
    else if (key == "seed") in >> s.seed;
    else if (key == "recent_losses") {
      std::size_t n = 0;
      in >> n;
      if (n > 2) throw CheckpointError("corrupt run state in " + path.string());
      s.recent_losses.resize(n);
      for (double& l : s.recent_losses) in >> l;
    } else {
      throw CheckpointError("unknown run state key '" + key + "' in " + path.string());
    }
    if (!in) throw CheckpointError("corrupt run state in " + path.string());
  }
  return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& cp, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_config(cp.config, dir / "config.txt");
  cp.vocab.save(dir / "vocab.txt");
  ad::save_parameters(cp.params, dir / "params.bin");
  write_state(cp.state, dir / "state.txt");
}

Checkpoint load_checkpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("checkpoint directory not found: " + dir.string());
  for (const char* f : {"config.txt", "vocab.txt", "params.bin", "state.txt"})
    if (!fs::exists(dir / f)) throw CheckpointError("checkpoint " + dir.string() + " lacks " + f);
  Checkpoint cp;
  try {
    cp.config = read_config(dir / "config.txt");
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }
  cp.vocab = corpus::Vocabulary::load(dir / "vocab.txt");
  const ad::ParameterSet loaded = ad::load_parameters(dir / "params.bin");
  ad::Rng rng(0);
  cp.params = model::make_parameters(model_config_for(cp.config, cp.vocab), rng);
  ad::assign_parameters(cp.params, loaded);
  cp.state = read_state(dir / "state.txt");
  return cp;
}

// ---- data

DataSplits load_data(const fs::path& dir, std::uint64_t seed) {
  if (!fs::is_directory(dir)) throw IoError("data directory not found: " + dir.string());
  DataSplits out;
  if (fs::exists(dir / "train.txt")) {
    out.train = corpus::read_corpus(dir / "train.txt");
    if (fs::exists(dir / "valid.txt")) out.valid = corpus::read_corpus(dir / "valid.txt");
    if (fs::exists(dir / "test.txt")) out.test = corpus::read_corpus(dir / "test.txt");
  } else if (fs::exists(dir / "corpus.txt")) {
    const auto all = corpus::read_corpus(dir / "corpus.txt");
    auto split = corpus::split_dataset<corpus::Conversation>(all, seed);
    out.train = std::move(split.train);
    out.valid = std::move(split.valid);
    out.test = std::move(split.test);
  } else {
    throw IoError("no train.txt or corpus.txt in " + dir.string());
  }
  if (out.train.empty()) throw EmptyInputError("training split is empty");
  return out;
}

const std::vector<corpus::Conversation>& select_split(const DataSplits& data, std::string_view name) {
  if (name == "train") return data.train;
  if (name == "valid" || name == "validation") return data.valid;
  if (name == "test") return data.test;
  throw ConfigError("unknown split '" + std::string(name) + "' (expected train, valid or test)");
}

// ---- metrics log

void write_metrics_header(std::ostream& out) { out << "step,gen_loss,disc_loss,lr,val_bleu2\n"; }

void write_metrics_row(std::ostream& out, const MetricsRow& row) {
  out << std::setprecision(10) << row.step << ',' << row.generator_loss << ',' << row.discriminator_loss << ','
      << row.lr << ',';
  if (row.val_bleu2) out << *row.val_bleu2;
  out << '\n';
}

// ---- trainer

Trainer::Trainer(TrainingConfig config, const DataSplits& data) : model_(model::ModelConfig{}) {
  config.validate();
  checkpoint_.config = config;
  checkpoint_.vocab = corpus::Vocabulary::build(corpus::all_utterances(data.train), config.vocab_size);
  const model::ModelConfig mc = model_config_for(config, checkpoint_.vocab);
  if (config.top_k > mc.vocab_size)
    throw ConfigError("top_k " + std::to_string(config.top_k) + " exceeds the vocabulary size " +
                      std::to_string(mc.vocab_size));
  model_ = model::HredModel(mc);
  ad::Rng rng(derive_seed(config.seed, kInitStream, 0));
  checkpoint_.params = model::make_parameters(mc, rng);
  checkpoint_.state.lr = config.lr;
  checkpoint_.state.seed = config.seed;
  train_ = corpus::make_examples(data.train, checkpoint_.vocab, config.limits());
  valid_ = corpus::make_examples(data.valid, checkpoint_.vocab, config.limits());
}

Trainer::Trainer(Checkpoint checkpoint, const DataSplits& data)
    : checkpoint_(std::move(checkpoint)), model_(model_config_for(checkpoint_.config, checkpoint_.vocab)) {
  checkpoint_.config.validate();
  train_ = corpus::make_examples(data.train, checkpoint_.vocab, checkpoint_.config.limits());
  valid_ = corpus::make_examples(data.valid, checkpoint_.vocab, checkpoint_.config.limits());
}

bool Trainer::finished() const {
  const RunState& s = checkpoint_.state;
  const TrainingConfig& c = checkpoint_.config;
  return (c.max_steps && s.step >= c.max_steps) || s.epoch >= c.max_epochs;
}

const std::vector<std::vector<DialogueExample>>& Trainer::epoch_batches(std::uint64_t epoch) const {
  if (cached_epoch_ == epoch) return cached_batches_;
  corpus::Rng rng(derive_seed(checkpoint_.state.seed, kEpochStream, epoch));
  std::vector<DialogueExample> examples = train_;
  // Distractors only feed the discriminator.
  if (checkpoint_.config.mode == SpecialCase::none) corpus::assign_distractors(examples, train_, rng);
  const auto batches = corpus::make_batches(examples, checkpoint_.config.batch_size, checkpoint_.config.limits(), rng);
  cached_batches_.clear();
  for (const corpus::Batch& b : batches) cached_batches_.push_back(b.examples());
  cached_epoch_ = epoch;
  return cached_batches_;
}

std::optional<StepResult> Trainer::step() {
  if (finished()) return std::nullopt;
  RunState& s = checkpoint_.state;
  const auto& batches = epoch_batches(s.epoch);
  if (s.batch_index >= batches.size()) throw CheckpointError("run state points past the end of the epoch");
  const std::uint64_t step_seed = derive_seed(s.seed, kStepStream, s.step);
  StepResult result = train_step(model_, checkpoint_.params, checkpoint_.config, batches[s.batch_index], step_seed, s.lr);

  ++s.step;
  if (++s.batch_index == batches.size()) {
    ++s.epoch;
    s.batch_index = 0;
  }
  std::vector<double> window = s.recent_losses;
  window.push_back(result.generator_loss);
  s.lr = lr_schedule(window, s.lr, checkpoint_.config.lr_decay);
  if (window.size() > 2) window.erase(window.begin());
  s.recent_losses = std::move(window);
  return result;
}

std::optional<double> Trainer::validate() const {
  if (valid_.empty()) return std::nullopt;
  DecodeSettings settings;
  settings.tau = checkpoint_.config.tau;
  const auto pairs = decode_pairs(model_, checkpoint_.params, checkpoint_.vocab, valid_, settings,
                                  derive_seed(checkpoint_.state.seed, kValidateStream, checkpoint_.state.step));
  return metrics::bleu2(pairs);
}

std::vector<MetricsRow> Trainer::run(const fs::path& out_dir, const StepCallback& on_step) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  const fs::path log_path = out_dir / "metrics.csv";

  const TrainingConfig& c = checkpoint_.config;
  auto on_cadence = [&c](std::uint64_t step) {
    return step % c.log_every == 0 || (c.validate_every && step % c.validate_every == 0);
  };

  // Keep rows up to the resumed step so a resumed log reads as one run. The
  // closing row of an interrupted run is dropped unless it falls on the
  // logging cadence.
  std::vector<std::string> kept;
  if (checkpoint_.state.step > 0 && fs::exists(log_path)) {
    std::ifstream in(log_path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const std::uint64_t step = std::stoull(line.substr(0, line.find(',')));
      if (step <= checkpoint_.state.step && on_cadence(step)) kept.push_back(line);
    }
  }
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw IoError("cannot write " + log_path.string());
  write_metrics_header(log);
  for (const std::string& line : kept) log << line << '\n';

  std::vector<MetricsRow> rows;
  while (auto result = step()) {
    const RunState& s = checkpoint_.state;
    MetricsRow row{s.step, result->generator_loss, result->discriminator_loss, s.lr, std::nullopt};
    if (c.validate_every && s.step % c.validate_every == 0) row.val_bleu2 = validate();
    if (on_cadence(s.step) || finished()) {
      write_metrics_row(log, row);
      log.flush();
      rows.push_back(row);
    }
    if (on_step) on_step(*result, row);
    if (c.checkpoint_every && s.step % c.checkpoint_every == 0) {
      std::ostringstream name;
      name << "step-" << std::setw(6) << std::setfill('0') << s.step;
      save(out_dir / "checkpoints" / name.str());
    }
  }
  save(out_dir / "final");
  return rows;
}

RunSummary run_training(const TrainingConfig& config, const fs::path& data_dir, const fs::path& out_dir) {
  config.validate();
  const DataSplits data = load_data(data_dir, config.seed);
  Trainer trainer(config, data);
  RunSummary out;
  out.rows = trainer.run(out_dir);
  out.final_checkpoint = out_dir / "final";
  return out;
}

RunSummary resume_training(const fs::path& checkpoint_dir, const fs::path& data_dir, const fs::path& out_dir,
                           std::optional<std::size_t> max_steps) {
  Checkpoint cp = load_checkpoint(checkpoint_dir);
  if (max_steps) cp.config.max_steps = *max_steps;
  const DataSplits data = load_data(data_dir, cp.config.seed);
  Trainer trainer(std::move(cp), data);
  RunSummary out;
  out.rows = trainer.run(out_dir);
  out.final_checkpoint = out_dir / "final";
  return out;
}

}  // namespace aboots::train
