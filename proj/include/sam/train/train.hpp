#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sam/data/corpus.hpp"
#include "sam/numkernel/params.hpp"
#include "sam/numkernel/tape.hpp"
#include "sam/samnet/samnet.hpp"

namespace sam {

/// Binary cross-entropy with the probability clamped to [1e-12, 1 - 1e-12].
/// Throws DataError for labels outside {0, 1}.
double bce_loss(double y_hat, int y);
/// Mean of bce_loss over a batch.
double bce_loss(std::span<const double> y_hat, std::span<const int> y);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 512;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Worker threads for the per-batch forward/backward. Results do not
  /// depend on this value.
  std::size_t threads = 1;
  /// When false, wallclock_s is logged as 0 so metric files are reproducible.
  bool record_wallclock = true;

  void validate() const;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(const ParamSet& params);
};

/// One bias-corrected Adam update of every tensor in `params`.
void adam_step(ParamSet& params, const Gradients& grads, AdamState& state, const TrainConfig& cfg);

struct EpochMetrics {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double train_auc = 0.0;  // NaN when the corpus holds a single class
  double wallclock_s = 0.0;
};

struct TrainResult {
  SamModel model;
  std::vector<EpochMetrics> log;
  std::uint64_t steps = 0;
};

/// Records one sample's forward pass on `tape` and returns the loss node;
/// the probability node is stored in `prob` when given.
Var sample_loss(Tape& tape, const SamModel& model, const Sample& sample, Var* prob = nullptr);

/// Mini-batch Adam over seeded shuffles of `corpus`. Batch gradients are
/// averaged over the batch. Throws NumericError on a non-finite loss.
TrainResult train(std::span<const Sample> corpus, const SamConfig& model_cfg,
                  const TrainConfig& train_cfg);

/// Header `epoch,mean_loss,train_auc,wallclock_s`.
void write_metrics_csv(std::ostream& out, std::span<const EpochMetrics> log);

struct TensorGradError {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  std::vector<TensorGradError> tensors;
  std::vector<std::string> failing;

  bool passed() const noexcept { return max_rel_err <= tolerance; }
};

/// Relative error |a - n| / max(|a|, |n|, floor) between an analytic and a
/// numeric derivative. The floor keeps derivatives that are both near zero
/// from reporting noise as error.
double gradient_rel_err(double analytic, double numeric);

/// Compares the tape gradient of `build_loss` against central differences of
/// `eval_loss` for every scalar in `params`. Both callbacks must read the
/// current contents of `params`.
GradCheckReport check_gradients(ParamSet& params, const std::function<Var(Tape&)>& build_loss,
                                const std::function<double()>& eval_loss, double tolerance,
                                double step = 1e-5);

/// End-to-end check of the cross-entropy gradient on one random sample of
/// length `model_cfg.embedding.max_len`, with every parameter randomly
/// perturbed away from its initial value.
GradCheckReport gradient_check(const SamConfig& model_cfg, std::uint64_t seed, double tolerance);

}  // namespace sam
