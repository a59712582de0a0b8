#include <sys/wait.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "sam_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run sam(const std::string& args, const std::string& env = "") {
  const std::string out = path("stdout.txt"), err = path("stderr.txt");
  const std::string cmd = env + " '" SAM_CLI_PATH "' " + args + " >'" + out + "' 2>'" + err + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

bool has(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

// Small memorisable corpus shared by the train/eval cases.
const std::string& tiny_corpus() {
  static const std::string p = [] {
    const std::string file = path("tiny.tsv");
    const Run r = sam("synth --task pairwise --vocab 60 --groups 5 --seq-len 8 --samples 50 --seed 3 --out " + file);
    REQUIRE(r.code == 0);
    return file;
  }();
  return p;
}

}  // namespace

TEST_CASE("help lists every subcommand") {
  const Run r = sam("--help");
  CHECK(r.code == 0);
  for (const char* sub : {"synth", "train", "eval", "bench", "gradcheck"}) CHECK(has(r.out, sub));
  const Run t = sam("train --help");
  CHECK(t.code == 0);
  for (const char* flag : {"--data", "--model", "--iters", "--mem-steps", "--use-ts-pos", "--out-metrics"})
    CHECK(has(t.out, flag));
}

TEST_CASE("synth writes the requested number of lines, deterministically") {
  const std::string a = path("c1.tsv"), b = path("c2.tsv");
  const std::string flags = "synth --task compositional --vocab 1000 --groups 50 --seq-len 30 --samples 20000 --seed 1";
  const Run r = sam(flags + " --out " + a);
  REQUIRE(r.code == 0);
  CHECK(has(r.out, "samples=20000"));
  CHECK(has(r.out, "positives=10000"));
  CHECK(has(r.out, "vocab=1000"));
  CHECK(count_lines(slurp(a)) == 20000);
  REQUIRE(sam(flags + " --out " + b).code == 0);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("synth rejects too many groups and names the flags") {
  const Run r = sam("synth --task compositional --vocab 1000 --groups 400 --out " + path("bad.tsv"));
  CHECK(r.code == 4);
  CHECK(has(r.err, "--groups"));
  CHECK(has(r.err, "--vocab"));
  CHECK_FALSE(fs::exists(path("bad.tsv")));
}

TEST_CASE("exit codes by error class") {
  CHECK(sam("synth --task compositional").code == 2);               // missing --out
  CHECK(sam("train --data /nonexistent.tsv --out-ckpt x").code == 2);  // flag check
  CHECK(sam("frobnicate").code == 2);
  CHECK(sam("synth --task triple --out " + path("t.tsv")).code == 2);  // value outside the allowed set

  const std::string broken = path("broken.tsv");
  std::ofstream(broken) << "1\t1:1:1:1\t\tnot-a-number\n";
  const Run d = sam("train --data " + broken + " --out-ckpt " + path("b.ckpt"));
  CHECK(d.code == 3);
  CHECK(has(d.err, "line 1"));

  const Run n = sam("gradcheck --tol 0");
  CHECK(n.code == 5);
}

TEST_CASE("train validates the model configuration") {
  const Run r = sam("train --data " + tiny_corpus() + " --model sam --iters 0 --out-ckpt " + path("z.ckpt"));
  CHECK(r.code == 4);
  CHECK(has(r.err, "iters"));
  CHECK(sam("train --data " + tiny_corpus() + " --model bert --out-ckpt " + path("z.ckpt")).code == 2);
  CHECK(sam("train --data " + tiny_corpus() + " --use-ts-pos maybe --out-ckpt " + path("z.ckpt")).code == 2);
  CHECK(sam("train --data " + tiny_corpus() + " --dim 6 --out-ckpt " + path("z.ckpt")).code == 4);
}

TEST_CASE("train then eval: memorised corpus, config echo, mismatch") {
  const std::string ckpt = path("m.ckpt"), metrics = path("m.csv"), entropy = path("e.csv");
  const Run t = sam("train --data " + tiny_corpus() +
                    " --model sam-nome --iters 2 --dim 16 --epochs 150 --batch 10 --lr 0.01 --seed 4 --out-ckpt " +
                    ckpt + " --out-metrics " + metrics + " --wallclock off");
  REQUIRE(t.code == 0);
  CHECK(has(t.out, "steps=750"));
  const std::string m = slurp(metrics);
  CHECK(m.rfind("epoch,mean_loss,train_auc,wallclock_s\n", 0) == 0);
  CHECK(count_lines(m) == 151);

  const Run e = sam("eval --data " + tiny_corpus() + " --ckpt " + ckpt + " --out " + entropy);
  REQUIRE(e.code == 0);
  CHECK(has(e.out, "auc=1 "));
  const std::string trace = slurp(entropy);
  CHECK(trace.rfind("iteration,mean_entropy\n", 0) == 0);
  CHECK(count_lines(trace) == 3);

  CHECK(sam("eval --data " + tiny_corpus() + " --ckpt " + ckpt + " --model sam-nome --iters 2 --dim 16").code == 0);
  const Run bad = sam("eval --data " + tiny_corpus() + " --ckpt " + ckpt + " --model sam --iters 3");
  CHECK(bad.code == 4);
  CHECK(has(bad.err, "variant"));
  CHECK(has(bad.err, "walk_iters"));

  const std::string single = path("single.tsv");
  {
    std::ofstream out(single);
    std::istringstream in(slurp(tiny_corpus()));
    for (std::string line; std::getline(in, line);)
      if (line.rfind("1\t", 0) == 0) out << line << '\n';
  }
  const Run s = sam("eval --data " + single + " --ckpt " + ckpt);
  CHECK(s.code == 3);
  CHECK(has(s.err, "AUC undefined"));
}

TEST_CASE("train is bit-reproducible and thread-count independent") {
  const std::string base = "train --data " + tiny_corpus() + " --model sam --epochs 3 --batch 16 --seed 5 --wallclock off";
  REQUIRE(sam(base + " --out-ckpt " + path("r1.ckpt") + " --out-metrics " + path("r1.csv")).code == 0);
  REQUIRE(sam(base + " --out-ckpt " + path("r2.ckpt") + " --out-metrics " + path("r2.csv"), "SAM_THREADS=3").code == 0);
  CHECK(slurp(path("r1.ckpt")) == slurp(path("r2.ckpt")));
  CHECK(slurp(path("r1.csv")) == slurp(path("r2.csv")));
  CHECK(sam(base + " --out-ckpt " + path("r3.ckpt"), "SAM_THREADS=zero").code == 4);
}

TEST_CASE("config file supplies defaults; flags override") {
  const std::string cfg = path("run.ini");
  std::ofstream(cfg) << "[train]\nepochs=2\nbatch=25\nmodel=din\n";
  const Run r = sam("--config " + cfg + " train --data " + tiny_corpus() + " --batch 50 --out-ckpt " + path("c.ckpt"));
  REQUIRE(r.code == 0);
  CHECK(has(r.out, "steps=2"));
  CHECK(sam("eval --data " + tiny_corpus() + " --ckpt " + path("c.ckpt") + " --model din").code == 0);
}

TEST_CASE("bench emits the cartesian product of rows") {
  const std::string csv = path("bench.csv");
  const Run r = sam("bench --variants sam,selfattn --seq-lens 256,512,1024 --dim 8 --repeats 5 --out " + csv);
  REQUIRE(r.code == 0);
  const std::string text = slurp(csv);
  CHECK(count_lines(text) == 7);
  CHECK(text.rfind("variant,L,forward_ms_mean,forward_ms_std,peak_bytes,flops\n", 0) == 0);
  CHECK(sam("bench --repeats 2").code == 4);
}

TEST_CASE("gradcheck exit codes") {
  CHECK(sam("gradcheck --dim 4 --seq-len 5 --iters 3 --mem-steps 3 --tol 1e-4 --seed 0").code == 0);
  const Run all = sam("gradcheck --all-variants --seed 1");
  CHECK(all.code == 0);
  CHECK(has(all.out, "PASS"));
  CHECK(sam("gradcheck --model din --all-variants").code == 2);
}
