#include "sam/train/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

#include "sam/evalbench/csv.hpp"
#include "sam/evalbench/metrics.hpp"
#include "sam/numkernel/error.hpp"
#include "sam/numkernel/random.hpp"
#include "sam/samnet/forward.hpp"

namespace sam {

namespace {

constexpr double kProbClamp = 1e-12;
constexpr double kRelErrFloor = 1e-6;
// Every batch is cut into this many chunks whatever the thread count, so the
// floating-point summation order never depends on it.
constexpr std::size_t kChunks = 8;

void check_label(int y) {
  if (y != 0 && y != 1) throw DataError("label must be 0 or 1, got " + std::to_string(y));
}

struct ChunkResult {
  Gradients grads;
  double loss = 0.0;
  std::vector<double> probs;
};

void run_chunk(const SamModel& model, std::span<const Sample> corpus,
               std::span<const std::size_t> indices, ChunkResult& out) {
  Tape tape(model.params());
  out.loss = 0.0;
  out.probs.clear();
  for (std::size_t idx : indices) {
    tape.clear();
    const Sample& s = corpus[idx];
    Var prob;
    const Var loss = sample_loss(tape, model, s, &prob);
    out.probs.push_back(tape.value(prob)[0]);
    out.loss += tape.value(loss)[0];
    tape.backward(loss, out.grads);
  }
}

}  // namespace

double bce_loss(double y_hat, int y) {
  check_label(y);
  if (std::isnan(y_hat)) throw NumericError("bce_loss: prediction is NaN");
  const double p = std::clamp(y_hat, kProbClamp, 1.0 - kProbClamp);
  return y == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double bce_loss(std::span<const double> y_hat, std::span<const int> y) {
  if (y_hat.size() != y.size())
    throw ShapeError("bce_loss: " + std::to_string(y_hat.size()) + " predictions vs " +
                     std::to_string(y.size()) + " labels");
  if (y.empty()) throw DataError("bce_loss: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += bce_loss(y_hat[i], y[i]);
  return total / static_cast<double>(y.size());
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (threads < 1) throw ConfigError("threads must be at least 1");
}

AdamState::AdamState(const ParamSet& params) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    m.push_back(Tensor::zeros_like(params.at(i)));
    v.push_back(Tensor::zeros_like(params.at(i)));
  }
}

void adam_step(ParamSet& params, const Gradients& grads, AdamState& state, const TrainConfig& cfg) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters, " +
                     std::to_string(grads.size()) + " gradients, " + std::to_string(state.m.size()) +
                     " moments");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape& s = params.at(i).shape();
    if (grads.at(i).shape() != s || state.m[i].shape() != s || state.v[i].shape() != s)
      throw ShapeError("adam_step: " + params.name(i) + " is " + shape_string(s) + " but gradient is " +
                       shape_string(grads.at(i).shape()));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.at(i).data();
    auto g = grads.at(i).data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

Var sample_loss(Tape& tape, const SamModel& model, const Sample& sample, Var* prob) {
  check_label(sample.label);
  const auto trace = detail::sam_forward(tape, model, sample.sequence, sample.target, {});
  if (prob) *prob = trace.prob;
  return tape.bce(trace.prob, sample.label);
}

TrainResult train(std::span<const Sample> corpus, const SamConfig& model_cfg,
                  const TrainConfig& train_cfg) {
  train_cfg.validate();
  model_cfg.validate();
  if (corpus.empty()) throw DataError("training corpus is empty");
  for (const auto& s : corpus) {
    if (s.label != 0 && s.label != 1)
      throw DataError("line " + std::to_string(s.line) + ": label must be 0 or 1");
    check_sequence(s.sequence, model_cfg.embedding);
    check_ids(s.target, model_cfg.embedding);
  }

  TrainResult result{SamModel::create(model_cfg, train_cfg.seed), {}, 0};
  SamModel& model = result.model;
  AdamState state(model.params());
  Rng shuffle_rng(train_cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<ChunkResult> chunks(kChunks);
  for (auto& c : chunks) c.grads = Gradients(model.params());
  Gradients batch_grads(model.params());
  std::vector<ScoredLabel> scored(corpus.size());

  for (std::size_t epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;

    for (std::size_t begin = 0; begin < order.size(); begin += train_cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + train_cfg.batch_size);
      const std::size_t n = end - begin;
      const std::span<const std::size_t> batch(order.data() + begin, n);

      auto chunk_span = [&](std::size_t k) {
        const std::size_t lo = n * k / kChunks, hi = n * (k + 1) / kChunks;
        return batch.subspan(lo, hi - lo);
      };
      for (auto& c : chunks) c.grads.zero();

      const std::size_t workers = std::min(train_cfg.threads, kChunks);
      if (workers <= 1) {
        for (std::size_t k = 0; k < kChunks; ++k) run_chunk(model, corpus, chunk_span(k), chunks[k]);
      } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (std::size_t w = 0; w < workers; ++w)
          pool.emplace_back([&, w] {
            try {
              for (std::size_t k = w; k < kChunks; k += workers)
                run_chunk(model, corpus, chunk_span(k), chunks[k]);
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
          if (e) std::rethrow_exception(e);
      }

      batch_grads.zero();
      double batch_loss = 0.0;
      for (std::size_t k = 0; k < kChunks; ++k) {
        batch_grads.accumulate(chunks[k].grads);
        batch_loss += chunks[k].loss;
        const auto idx = chunk_span(k);
        for (std::size_t i = 0; i < idx.size(); ++i)
          scored[begin + n * k / kChunks + i] = {chunks[k].probs[i], corpus[idx[i]].label};
      }
      if (!std::isfinite(batch_loss))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(result.steps + 1));
      loss_sum += batch_loss;
      batch_grads.scale(1.0 / static_cast<double>(n));
      adam_step(model.params(), batch_grads, state, train_cfg);
      ++result.steps;
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.mean_loss = loss_sum / static_cast<double>(corpus.size());
    try {
      m.train_auc = auc(scored);
    } catch (const DataError&) {
      m.train_auc = std::numeric_limits<double>::quiet_NaN();
    }
    if (train_cfg.record_wallclock)
      m.wallclock_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(m);
  }
  return result;
}

void write_metrics_csv(std::ostream& out, std::span<const EpochMetrics> log) {
  out << "epoch,mean_loss,train_auc,wallclock_s\n";
  for (const auto& m : log)
    out << m.epoch << ',' << format_double(m.mean_loss) << ',' << format_double(m.train_auc) << ','
        << format_double(m.wallclock_s) << '\n';
}

double gradient_rel_err(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelErrFloor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport check_gradients(ParamSet& params, const std::function<Var(Tape&)>& build_loss,
                                const std::function<double()>& eval_loss, double tolerance,
                                double step) {
  Gradients analytic(params);
  {
    Tape tape(params);
    const Var loss = build_loss(tape);
    tape.backward(loss, analytic);
  }

  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.at(i).data();
    const auto a = analytic.at(i).data();
    double worst = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double saved = p[k];
      p[k] = saved + step;
      const double up = eval_loss();
      p[k] = saved - step;
      const double down = eval_loss();
      p[k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = gradient_rel_err(a[k], numeric);
      if (!(err <= worst)) worst = err;  // NaN propagates as a failure
    }
    report.tensors.push_back({params.name(i), worst});
    if (!(worst <= tolerance)) report.failing.push_back(params.name(i));
    if (!(worst <= report.max_rel_err)) report.max_rel_err = worst;
  }
  return report;
}

GradCheckReport gradient_check(const SamConfig& model_cfg, std::uint64_t seed, double tolerance) {
  model_cfg.validate();
  SamModel model = SamModel::create(model_cfg, seed);
  Rng rng(seed * 0x2545f4914f6cdd1dULL + 17);

  for (std::size_t i = 0; i < model.params().size(); ++i)
    for (double& x : model.params().at(i).data()) x += rng.uniform(-0.3, 0.3);

  const EmbeddingConfig& e = model_cfg.embedding;
  auto draw = [&] {
    return ItemIds{static_cast<std::uint32_t>(rng.below(e.item_vocab)),
                   static_cast<std::uint32_t>(rng.below(e.cate_vocab)),
                   static_cast<std::uint32_t>(rng.below(e.shop_vocab)),
                   static_cast<std::uint32_t>(rng.below(e.brand_vocab))};
  };
  Sample sample;
  sample.label = rng.coin() ? 1 : 0;
  sample.target = draw();
  sample.sequence.rank_ts = 1'000'000;
  std::int64_t ts = 0;
  for (std::size_t j = 0; j < e.max_len; ++j) {
    ts += static_cast<std::int64_t>(rng.below(50'000));
    sample.sequence.events.push_back({draw(), ts});
  }

  return check_gradients(
      model.params(), [&](Tape& tape) { return sample_loss(tape, model, sample); },
      [&] { return bce_loss(predict(model, sample.sequence, sample.target).probability, sample.label); },
      tolerance);
}

}  // namespace sam
