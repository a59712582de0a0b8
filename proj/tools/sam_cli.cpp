// sam: command-line front end (synth, train, eval, bench, gradcheck).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sam/data/checkpoint.hpp"
#include "sam/data/corpus.hpp"
#include "sam/data/synth.hpp"
#include "sam/evalbench/bench.hpp"
#include "sam/evalbench/csv.hpp"
#include "sam/evalbench/metrics.hpp"
#include "sam/numkernel/error.hpp"
#include "sam/train/train.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kParse = 2,
  kData = 3,
  kConfig = 4,
  kNumeric = 5,
};

const std::vector<std::string> kModelNames{"sam", "sam-nome", "din", "dotprod", "avgpool"};

std::size_t env_threads() {
  const char* raw = std::getenv("SAM_THREADS");
  if (raw == nullptr || *raw == '\0') return 1;
  try {
    const long n = std::stol(raw);
    if (n >= 1) return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
  }
  throw sam::ConfigError(std::string("SAM_THREADS must be a positive integer, got '") + raw + "'");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw sam::DataError("cannot open '" + path + "' for writing");
  return out;
}

void close_out(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw sam::DataError("failed writing '" + path + "'");
}

bool on_off(const std::string& v) { return v == "on"; }

// ---------------------------------------------------------------- synth

struct SynthOpts {
  std::string task;
  std::size_t vocab = 1000, groups = 50, seq_len = 30, samples = 1000;
  double noise_ratio = 1.0;
  std::uint64_t seed = 1;
  std::string out;
};

void run_synth(const SynthOpts& o) {
  sam::SynthSpec spec;
  spec.task = sam::parse_synth_task(o.task);
  spec.vocab = o.vocab;
  spec.groups = o.groups;
  spec.seq_len = o.seq_len;
  spec.num_samples = o.samples;
  spec.noise_ratio = o.noise_ratio;
  spec.seed = o.seed;
  if (o.groups >= 1 && 3 * o.groups > o.vocab)
    throw sam::ConfigError("--groups " + std::to_string(o.groups) + " needs --vocab of at least 3 x groups = " +
                           std::to_string(3 * o.groups) + " (got --vocab " + std::to_string(o.vocab) +
                           ")");
  try {
    spec.validate();
  } catch (const sam::ConfigError& e) {
    throw sam::ConfigError(std::string("invalid synth flags: ") + e.what());
  }
  const auto samples = sam::generate_synthetic(spec);
  sam::write_corpus(o.out, samples);
  const auto stats = sam::corpus_stats(samples);
  std::cout << "samples=" << samples.size() << " positives=" << stats.positives
            << " vocab=" << o.vocab << " out=" << o.out << '\n';
}

// ---------------------------------------------------------------- train

struct ModelOpts {
  std::string model = "sam";
  std::size_t iters = 3, mem_steps = 3, dim = 16, attn_hidden = 16;
  std::string use_ts_pos = "on";
  std::size_t item_vocab = 0, cate_vocab = 0, shop_vocab = 0, brand_vocab = 0, max_len = 0;
};

struct TrainOpts {
  ModelOpts m;
  std::string data, out_ckpt, out_metrics;
  std::size_t epochs = 1, batch = 512;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::string wallclock = "on";
};

sam::SamConfig model_config(const ModelOpts& o, const sam::CorpusStats& stats) {
  auto pick = [](std::size_t flag, std::size_t inferred) {
    return flag > 0 ? flag : std::max<std::size_t>(inferred, 1);
  };
  sam::SamConfig cfg;
  cfg.variant = sam::variant_from_model_name(o.model);
  cfg.walk_iters = o.iters;
  cfg.mem_steps = o.mem_steps;
  cfg.attn_hidden = o.attn_hidden;
  cfg.use_ts_pos = on_off(o.use_ts_pos);
  cfg.embedding.dim = o.dim;
  cfg.embedding.item_vocab = pick(o.item_vocab, stats.item_vocab);
  cfg.embedding.cate_vocab = pick(o.cate_vocab, stats.cate_vocab);
  cfg.embedding.shop_vocab = pick(o.shop_vocab, stats.shop_vocab);
  cfg.embedding.brand_vocab = pick(o.brand_vocab, stats.brand_vocab);
  cfg.embedding.max_len = pick(o.max_len, stats.max_len);
  if (o.iters == 0) throw sam::ConfigError("--iters must be at least 1");
  cfg.validate();
  return cfg;
}

void run_train(const TrainOpts& o) {
  const auto corpus = sam::parse_corpus(o.data);
  if (corpus.empty()) throw sam::DataError("'" + o.data + "' holds no samples");
  const sam::SamConfig cfg = model_config(o.m, sam::corpus_stats(corpus));

  sam::TrainConfig tc;
  tc.learning_rate = o.lr;
  tc.batch_size = o.batch;
  tc.epochs = o.epochs;
  tc.seed = o.seed;
  tc.threads = env_threads();
  tc.record_wallclock = on_off(o.wallclock);

  const auto result = sam::train(corpus, cfg, tc);
  for (const auto& e : result.log)
    std::cout << "epoch " << e.epoch << " loss=" << sam::format_double(e.mean_loss)
              << " train_auc=" << sam::format_double(e.train_auc) << '\n';

  sam::save_checkpoint(result.model, o.out_ckpt);
  if (!o.out_metrics.empty()) {
    auto out = open_out(o.out_metrics);
    sam::write_metrics_csv(out, result.log);
    close_out(out, o.out_metrics);
  }
  std::cout << "steps=" << result.steps << " checkpoint=" << o.out_ckpt << '\n';
}

// ---------------------------------------------------------------- eval

struct EvalOpts {
  std::string data, ckpt, out, out_auc;
  // Optional expectations checked against the checkpoint's stored config.
  std::string model, use_ts_pos;
  std::size_t iters = 0, mem_steps = 0, dim = 0;
};

void run_eval(const EvalOpts& o) {
  const sam::SamModel model = sam::load_checkpoint(o.ckpt);
  sam::SamConfig expected = model.config();
  if (!o.model.empty()) expected.variant = sam::variant_from_model_name(o.model);
  if (o.iters > 0) expected.walk_iters = o.iters;
  if (o.mem_steps > 0) expected.mem_steps = o.mem_steps;
  if (o.dim > 0) expected.embedding.dim = o.dim;
  if (!o.use_ts_pos.empty()) expected.use_ts_pos = on_off(o.use_ts_pos);
  const auto diff = sam::config_diff(model.config(), expected);
  if (!diff.empty()) {
    std::string names;
    for (const auto& d : diff) names += (names.empty() ? "" : ", ") + d;
    throw sam::ConfigError("flags disagree with the checkpoint config on: " + names);
  }

  const auto samples = sam::parse_corpus(o.data);
  const auto scored = sam::score_corpus(model, samples);
  double auc = 0.0;
  try {
    auc = sam::auc(scored);
  } catch (const sam::DataError& e) {
    throw sam::DataError(std::string("AUC undefined for '") + o.data + "': " + e.what());
  }
  const auto trace = sam::entropy_vs_iterations(model, samples);

  std::cout << "auc=" << sam::format_double(auc) << " entropy=";
  for (std::size_t i = 0; i < trace.mean_entropy.size(); ++i)
    std::cout << (i ? "," : "") << sam::format_double(trace.mean_entropy[i]);
  std::cout << '\n';

  if (!o.out.empty()) {
    auto out = open_out(o.out);
    sam::write_entropy_csv(out, trace);
    close_out(out, o.out);
  }
  if (!o.out_auc.empty()) {
    auto out = open_out(o.out_auc);
    out << "auc\n" << sam::format_double(auc) << '\n';
    close_out(out, o.out_auc);
  }
}

// ---------------------------------------------------------------- bench

struct BenchOpts {
  sam::BenchOptions b;
  std::string out;
};

void run_bench(const BenchOpts& o) {
  const auto report = sam::bench_scaling(o.b);
  if (o.out.empty()) {
    sam::write_bench_csv(std::cout, report);
  } else {
    auto out = open_out(o.out);
    sam::write_bench_csv(out, report);
    close_out(out, o.out);
  }
  if (const auto inv = sam::count_timing_inversions(report); inv > 0)
    std::cerr << "note: " << inv << " timing inversion(s) across L (timer noise)\n";
}

// ---------------------------------------------------------------- gradcheck

struct GradOpts {
  std::size_t dim = 8, seq_len = 6, iters = 3, mem_steps = 3, attn_hidden = 8;
  double tol = 1e-4;
  std::uint64_t seed = 0;
  std::string model = "sam";
  bool all_variants = false;
};

int run_gradcheck(const GradOpts& o) {
  std::vector<std::string> models = o.all_variants ? kModelNames : std::vector<std::string>{o.model};
  double worst = 0.0;
  for (const auto& name : models) {
    sam::SamConfig cfg;
    cfg.variant = sam::variant_from_model_name(name);
    cfg.walk_iters = o.iters;
    cfg.mem_steps = o.mem_steps;
    cfg.attn_hidden = o.attn_hidden;
    cfg.mlp_hidden = {8, 4};
    cfg.embedding.dim = o.dim;
    cfg.embedding.item_vocab = 12;
    cfg.embedding.cate_vocab = 3;
    cfg.embedding.shop_vocab = 4;
    cfg.embedding.brand_vocab = 5;
    cfg.embedding.max_len = o.seq_len;
    const auto report = sam::gradient_check(cfg, o.seed, o.tol);
    std::cout << name << " max_rel_err=" << sam::format_double(report.max_rel_err);
    if (!report.failing.empty()) {
      std::cout << " failing=";
      for (std::size_t i = 0; i < report.failing.size(); ++i)
        std::cout << (i ? "," : "") << report.failing[i];
    }
    std::cout << '\n';
    if (!(report.max_rel_err <= worst)) worst = report.max_rel_err;
  }
  const bool pass = worst <= o.tol;
  std::cout << (pass ? "PASS" : "FAIL") << " max_rel_err=" << sam::format_double(worst)
            << " tol=" << sam::format_double(o.tol) << '\n';
  return pass ? kOk : kNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse Attentive Memory network: synthetic data, training, evaluation, benchmarks.\n"
               "Exit codes: 0 ok, 1 internal error, 2 usage, 3 data/IO, 4 configuration, 5 numeric failure."};
  app.set_config("--config", "", "INI/TOML file supplying defaults; command-line flags override")
      ->check(CLI::ExistingFile);
  app.require_subcommand(1);
  const auto on_off_check = CLI::IsMember({"on", "off"});

  SynthOpts so;
  auto* synth = app.add_subcommand("synth", "Generate a planted-pattern synthetic corpus");
  synth->add_option("--task", so.task, "compositional or pairwise")
      ->required()
      ->check(CLI::IsMember({"compositional", "pairwise"}));
  synth->add_option("--vocab", so.vocab, "Item vocabulary size")->capture_default_str();
  synth->add_option("--groups", so.groups, "Planted groups G (3G < vocab)")->capture_default_str();
  synth->add_option("--seq-len", so.seq_len, "Sequence length L")->capture_default_str();
  synth->add_option("--samples", so.samples, "Number of samples")->capture_default_str();
  synth->add_option("--noise-ratio", so.noise_ratio, "Fraction of non-signal slots filled with noise")
      ->capture_default_str();
  synth->add_option("--seed", so.seed, "Random seed")->capture_default_str();
  synth->add_option("--out", so.out, "Output corpus path")->required();

  TrainOpts to;
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  auto add_model_flags = [&](CLI::App* sub, ModelOpts& m) {
    sub->add_option("--model", m.model, "sam | sam-nome | din | dotprod | avgpool")
        ->check(CLI::IsMember(kModelNames))
        ->capture_default_str();
    sub->add_option("--iters", m.iters, "Memory walk iterations N (>= 1)")->capture_default_str();
    sub->add_option("--mem-steps", m.mem_steps, "Memory enhancement steps t")->capture_default_str();
    sub->add_option("--dim", m.dim, "Embedding dimension d (multiple of 4)")->capture_default_str();
    sub->add_option("--attn-hidden", m.attn_hidden, "Attention hidden width")->capture_default_str();
    sub->add_option("--use-ts-pos", m.use_ts_pos, "Add time-bucket and position embeddings")
        ->check(on_off_check)
        ->capture_default_str();
    sub->add_option("--item-vocab", m.item_vocab, "Item vocabulary (default: inferred from data)");
    sub->add_option("--cate-vocab", m.cate_vocab, "Category vocabulary (default: inferred)");
    sub->add_option("--shop-vocab", m.shop_vocab, "Shop vocabulary (default: inferred)");
    sub->add_option("--brand-vocab", m.brand_vocab, "Brand vocabulary (default: inferred)");
    sub->add_option("--max-len", m.max_len, "Longest sequence supported (default: inferred)");
  };
  add_model_flags(train, to.m);
  train->add_option("--data", to.data, "Training corpus")->required()->check(CLI::ExistingFile);
  train->add_option("--epochs", to.epochs, "Epochs")->capture_default_str();
  train->add_option("--batch", to.batch, "Mini-batch size")->capture_default_str();
  train->add_option("--lr", to.lr, "Adam learning rate")->capture_default_str();
  train->add_option("--seed", to.seed, "Random seed")->capture_default_str();
  train->add_option("--out-ckpt", to.out_ckpt, "Checkpoint output path")->required();
  train->add_option("--out-metrics", to.out_metrics, "Per-epoch metrics CSV");
  train->add_option("--wallclock", to.wallclock, "Record epoch wall time (off writes 0)")
      ->check(on_off_check)
      ->capture_default_str();

  EvalOpts eo;
  auto* eval = app.add_subcommand("eval", "Score a corpus with a checkpoint");
  eval->add_option("--data", eo.data, "Evaluation corpus")->required()->check(CLI::ExistingFile);
  eval->add_option("--ckpt", eo.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", eo.out, "Entropy trace CSV output");
  eval->add_option("--out-auc", eo.out_auc, "AUC CSV output");
  eval->add_option("--model", eo.model, "Expected model (checked against checkpoint)")
      ->check(CLI::IsMember(kModelNames));
  eval->add_option("--iters", eo.iters, "Expected N (checked against checkpoint)");
  eval->add_option("--mem-steps", eo.mem_steps, "Expected t (checked against checkpoint)");
  eval->add_option("--dim", eo.dim, "Expected dimension (checked against checkpoint)");
  eval->add_option("--use-ts-pos", eo.use_ts_pos, "Expected setting (checked against checkpoint)")
      ->check(on_off_check);

  BenchOpts bo;
  auto* bench = app.add_subcommand("bench", "Forward-pass time, peak memory and FLOPs against L");
  bench->add_option("--variants", bo.b.variants, "Comma list of models, plus selfattn")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--seq-lens", bo.b.seq_lens, "Comma list of sequence lengths")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--dim", bo.b.dim, "Embedding dimension")->capture_default_str();
  bench->add_option("--repeats", bo.b.repeats, "Timed repeats (>= 5)")->capture_default_str();
  bench->add_option("--iters", bo.b.walk_iters, "Walk iterations N")->capture_default_str();
  bench->add_option("--mem-steps", bo.b.mem_steps, "Enhancement steps t")->capture_default_str();
  bench->add_option("--seed", bo.b.seed, "Random seed")->capture_default_str();
  bench->add_option("--out", bo.out, "CSV output (default stdout)");

  GradOpts go;
  auto* grad = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  grad->add_option("--dim", go.dim, "Embedding dimension")->capture_default_str();
  grad->add_option("--seq-len", go.seq_len, "Sequence length")->capture_default_str();
  grad->add_option("--iters", go.iters, "Walk iterations N")->capture_default_str();
  grad->add_option("--mem-steps", go.mem_steps, "Enhancement steps t")->capture_default_str();
  grad->add_option("--attn-hidden", go.attn_hidden, "Attention hidden width")->capture_default_str();
  grad->add_option("--tol", go.tol, "Maximum relative error")->capture_default_str();
  grad->add_option("--seed", go.seed, "Random seed")->capture_default_str();
  auto* model_flag = grad->add_option("--model", go.model, "Model to check")
                         ->check(CLI::IsMember(kModelNames))
                         ->capture_default_str();
  auto* all_flag = grad->add_flag("--all-variants", go.all_variants, "Check every model");
  model_flag->excludes(all_flag);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParse;
  }

  try {
    if (*synth) run_synth(so);
    if (*train) run_train(to);
    if (*eval) run_eval(eo);
    if (*bench) run_bench(bo);
    if (*grad) return run_gradcheck(go);
    return kOk;
  } catch (const sam::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const sam::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const sam::ShapeError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const sam::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
}
