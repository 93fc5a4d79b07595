// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Arguments select criteria by number (default all).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hiersumm/corpus.hpp"
#include "hiersumm/model.hpp"
#include "hiersumm/textproc.hpp"
#include "hiersumm/train_eval.hpp"
#include "support/attention_checks.hpp"
#include "support/cli_pipeline.hpp"
#include "support/corpus_oracles.hpp"
#include "support/model_fixtures.hpp"
#include "support/rouge_oracles.hpp"

namespace hs = hiersumm;
using hs::corpus::CorpusInstance;
using hs::corpus::InterleavePreset;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- shared training helpers -----------------------------------------------

std::vector<std::vector<std::string>> references(const std::vector<CorpusInstance>& xs) {
  std::vector<std::vector<std::string>> r;
  for (const auto& x : xs) r.push_back(x.summaries);
  return r;
}

template <typename T>
std::vector<std::vector<std::string>> generate_all(const hs::model::Model<T>& m,
                                                   const std::vector<hs::text::EncodedInstance>& xs,
                                                   const hs::text::Vocab& v) {
  std::vector<std::vector<std::string>> out;
  for (const auto& x : xs) {
    auto& row = out.emplace_back();
    for (const auto& s : m.generate(x).summaries) row.push_back(hs::text::decode_ids(s, v));
  }
  return out;
}

struct FitStats {
  double nll = 0.0;            // per token, teacher forced, no dropout
  double stop_accuracy = 0.0;  // teacher-forced stop decisions
};

template <typename T>
FitStats teacher_forced_stats(const hs::model::Model<T>& m, const std::vector<hs::text::EncodedInstance>& xs) {
  double nll = 0.0;
  std::size_t tokens = 0, right = 0, decisions = 0;
  for (const auto& x : xs) {
    hs::num::Graph<T> g(false);
    hs::model::Trace tr;
    const auto l = m.forward_loss(g, x, nullptr, &tr);
    nll += static_cast<double>(l.nll_sum.item());
    tokens += l.tokens;
    for (std::size_t k = 0; k < tr.threads.size() && k < x.stop_labels.size(); ++k) {
      ++decisions;
      right += (tr.threads[k].p_stop > 0.5) == (x.stop_labels[k] == 1);
    }
  }
  return {nll / static_cast<double>(tokens), decisions ? static_cast<double>(right) / decisions : 0.0};
}

std::vector<hs::text::EncodedInstance> encode_all(const std::vector<CorpusInstance>& xs, const hs::text::Vocab& v,
                                                  const hs::text::EncodeLimits& lim) {
  std::vector<hs::text::EncodedInstance> out;
  for (const auto& x : xs) out.push_back(hs::text::encode_instance(x, v, lim));
  return out;
}

// --- criteria ----------------------------------------------------------------

Outcome gradient_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_label, failures;
  const auto configs = fixture::all_configs(8, 20, 5, 4);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    hs::train::SyntheticShape shape;
    shape.posts = 4;
    const auto r = hs::train::gradcheck_model(configs[i], 100 + i, shape, 1e-5);
    if (r.report.max_rel_error > worst) {
      worst = r.report.max_rel_error;
      worst_label = configs[i].label();
    }
    if (!r.pass) failures += " " + configs[i].label();
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = failures.empty() && worst < 1e-4 && secs < 300.0;
  o.detail = std::to_string(configs.size()) + " configs, max rel error " + fmt("%.2e", worst) + " (" + worst_label +
             "), " + fmt("%.1f s", secs) + (failures.empty() ? "" : "; failing:" + failures);
  return o;
}

Outcome attention_invariants() {
  hs::Rng rng(2024);
  const auto configs = fixture::all_configs(6, 20, 5, 4);
  std::size_t passes = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto& cfg = configs[static_cast<std::size_t>(trial) % configs.size()];
    hs::model::Model<double> m(cfg, 7000 + static_cast<std::uint64_t>(trial));
    fixture::Shape shape;
    shape.posts = static_cast<std::size_t>(rng.uniform_int(1, 6));
    shape.threads = static_cast<std::size_t>(rng.uniform_int(1, 3));
    const auto x = fixture::random_encoded(rng, shape);
    const auto masks = checks::masks_for(cfg, x);
    hs::num::Graph<double> g(false);
    hs::model::Trace tr;
    m.forward_loss(g, x, nullptr, &tr);
    if (auto e = checks::check_trace(cfg, masks, tr); !e.empty()) {
      return {false, "trial " + std::to_string(trial) + " " + cfg.label() + ": " + e};
    }
    hs::model::Trace gen;
    m.generate(x, &gen);
    if (auto e = checks::check_trace(cfg, masks, gen); !e.empty()) {
      return {false, "trial " + std::to_string(trial) + " " + cfg.label() + " (generation): " + e};
    }
    ++passes;
  }
  return {true, std::to_string(passes) + " random forward passes (plus greedy decodes) across " +
                    std::to_string(configs.size()) + " configurations"};
}

Outcome interleaver() {
  const std::map<std::string, InterleavePreset> presets = {
      {"easy", InterleavePreset::easy()}, {"medium", InterleavePreset::medium()}, {"hard", InterleavePreset::hard()}};
  for (const auto& [name, preset] : presets) {
    const auto docs = oracle::labelled_docs(static_cast<std::size_t>(preset.b) + 1, 5, 11, 3);
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      hs::Rng rng(seed);
      const auto x = hs::corpus::interleave_window(docs, preset, rng);
      if (auto e = oracle::check_instance(x, docs, preset, true); !e.empty()) {
        return {false, name + " seed " + std::to_string(seed) + ": " + e};
      }
      if (name == "easy" && (x.posts.size() != 10 || x.summaries.size() != 2)) {
        return {false, "easy instance with " + std::to_string(x.posts.size()) + " posts"};
      }
    }
  }

  const auto stub_docs = oracle::labelled_docs(3, 4);
  oracle::ScriptedRandom stub({3, 2, 2, 2}, {0, 1, 2, 0, 1, 2});
  const auto x = hs::corpus::interleave_window(stub_docs, InterleavePreset{2, 3, 2, 5}, stub);
  const std::vector<std::string> want_posts = {"doc 0 sentence 0", "doc 1 sentence 0", "doc 2 sentence 0",
                                               "doc 0 sentence 1", "doc 1 sentence 1", "doc 2 sentence 1"};
  if (x.posts != want_posts || x.thread_ids != std::vector<int>{0, 1, 2, 0, 1, 2} ||
      x.summaries != std::vector<std::string>{"title 0", "title 1", "title 2"} || !stub.exhausted()) {
    return {false, "stub-generator hand trace differs"};
  }

  const auto docs = hs::corpus::make_toy_docs(200, 3);
  hs::corpus::SynthesisConfig cfg;
  cfg.preset = InterleavePreset::hard();
  cfg.seed = 17;
  auto dump = [&] {
    const auto c = hs::corpus::synthesize_corpus(docs, cfg);
    std::string s = c.stats.dump();
    for (const auto& split : c.splits) {
      for (const auto& i : split) s += hs::corpus::serialize_instance(i) + "\n";
    }
    return s;
  };
  if (dump() != dump()) return {false, "two synthesis runs with one seed differ"};
  return {true, "3000 instances satisfy every invariant; easy gives 10/2; stub trace exact; reruns byte-identical"};
}

Outcome rouge_oracles() {
  using hs::eval::rouge_l;
  using hs::eval::rouge_n;
  const auto w = [](const char* s) { return hs::text::tokenize(s); };
  const bool hand = rouge_n(w("the cat sat"), w("the cat ate"), 1).recall == 2.0 / 3.0 &&
                    rouge_n(w("a a a"), w("a b"), 1).recall == 0.5 &&
                    rouge_n(w("a a a"), w("a b"), 1).precision == 1.0 / 3.0 &&
                    hs::eval::lcs_length(w("a c b"), w("a b c")) == 2 &&
                    rouge_l(w("a c b"), w("a b c")).recall == 2.0 / 3.0;
  if (!hand) return {false, "hand-computed examples differ"};

  hs::Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    auto draw = [&] {
      std::vector<int> v(static_cast<std::size_t>(rng.uniform_int(0, 12)));
      for (auto& t : v) t = static_cast<int>(rng.uniform_int(0, 4));
      return v;
    };
    const auto c = draw(), r = draw();
    for (std::size_t n : {1u, 2u}) {
      const auto got = rouge_n(c, r, n);
      const auto hits = static_cast<double>(oracle::ngram_overlap(c, r, n));
      const double ref_units = r.size() >= n ? static_cast<double>(r.size() - n + 1) : 0.0;
      const double cand_units = c.size() >= n ? static_cast<double>(c.size() - n + 1) : 0.0;
      if (got.recall != (ref_units > 0 ? hits / ref_units : 0.0) ||
          got.precision != (cand_units > 0 ? hits / cand_units : 0.0)) {
        return {false, "rouge-" + std::to_string(n) + " differs from brute force at trial " + std::to_string(trial)};
      }
    }
    const auto lcs = oracle::brute_lcs(c, r);
    const auto rl = rouge_l(c, r);
    if (hs::eval::lcs_length(c, r) != lcs ||
        rl.recall != (r.empty() ? 0.0 : static_cast<double>(lcs) / static_cast<double>(r.size()))) {
      return {false, "rouge-l differs from exhaustive LCS at trial " + std::to_string(trial)};
    }
  }
  return {true, "hand examples exact; 100 random pairs equal brute-force n-gram and LCS oracles"};
}

Outcome desk_scale_learning() {
  const auto t0 = std::chrono::steady_clock::now();
  // 33 documents give 32 easy windows; the seed keeps neighbouring titles distinct.
  const auto docs = hs::corpus::make_toy_docs(33, 8);
  hs::corpus::SynthesisConfig sc;
  sc.preset = InterleavePreset::easy();
  sc.split_ratios = {1.0, 0.0, 0.0};
  sc.seed = 1;
  const auto corpus = hs::corpus::synthesize_corpus(docs, sc).splits[0];
  for (const auto& x : corpus) {
    if (x.summaries.size() != 2) return {false, "toy instance without two threads"};
  }
  const auto vocab = hs::text::build_vocab(corpus, 60);

  hs::model::ModelConfig cfg;
  cfg.d = 32;
  cfg.vocab_size = vocab.size();
  cfg.variant = hs::model::Variant::kHier2Hier;
  const auto data = encode_all(corpus, vocab, cfg.limits);

  hs::model::Model<float> m(cfg, 5);
  hs::num::AdamState<float> adam;
  hs::train::TrainOptions opt;
  opt.batch = 8;
  opt.lr = 1e-3;
  opt.seed = 5;
  opt.epochs = 1;

  FitStats fit;
  double recall = 0.0;
  std::size_t steps = 0;
  bool stops_ok = false;
  while (steps < 2000) {
    opt.max_steps = std::min<std::size_t>(100, 2000 - steps);
    opt.epochs = (opt.max_steps * opt.batch + data.size() - 1) / data.size();
    opt.seed = 5 + steps;
    steps += hs::train::train(m, adam, data, opt).steps;
    fit = teacher_forced_stats(m, data);
    if (fit.nll >= 0.1 || fit.stop_accuracy < 1.0) continue;
    const auto gen = generate_all(m, data, vocab);
    stops_ok = true;
    for (std::size_t i = 0; i < gen.size(); ++i) stops_ok = stops_ok && gen[i].size() == corpus[i].summaries.size();
    recall = hs::eval::evaluate_corpus(gen, references(corpus)).mean.r1.recall;
    if (recall >= 0.90 && stops_ok) break;
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = fit.nll < 0.1 && recall >= 0.90 && fit.stop_accuracy == 1.0 && stops_ok && secs < 600.0;
  o.detail = std::to_string(steps) + " steps, vocab " + std::to_string(vocab.size()) +
             fmt(", nll/token %.4f, R1 recall %.3f, stop accuracy %.3f, %.0f s", fit.nll, recall,
                 fit.stop_accuracy, secs) +
             (stops_ok ? "" : ", greedy summary counts off");
  return o;
}

Outcome ordering_direction() {
  const auto t0 = std::chrono::steady_clock::now();
  // 2006 documents -> 1602 / 198 / 200 medium instances.
  const auto docs = hs::corpus::make_toy_docs(2006, 6);
  hs::corpus::SynthesisConfig sc;
  sc.preset = InterleavePreset::medium();
  sc.seed = 6;
  const auto c = hs::corpus::synthesize_corpus(docs, sc);
  const auto& train_set = c.splits[0];
  const auto& test_set = c.splits[2];
  const auto vocab = hs::text::build_vocab(train_set, 100);

  struct Run {
    const char* name;
    hs::model::Variant variant;
    bool gamma, beta;
    double recall = 0.0;
  };
  std::vector<Run> runs = {{"hier2hier(+g+b)", hs::model::Variant::kHier2Hier, true, true},
                           {"hier2hier(+g-b)", hs::model::Variant::kHier2Hier, true, false},
                           {"hier2hier(-g-b)", hs::model::Variant::kHier2Hier, false, false},
                           {"seq2seq", hs::model::Variant::kSeq2Seq, false, false}};
  std::string detail;
  for (auto& r : runs) {
    hs::model::ModelConfig cfg;
    cfg.d = 64;
    cfg.vocab_size = vocab.size();
    cfg.variant = r.variant;
    cfg.gamma_enabled = r.gamma;
    cfg.beta_enabled = r.beta;
    cfg.thread_cap = 5;
    const auto tr = encode_all(train_set, vocab, cfg.limits);
    const auto te = encode_all(test_set, vocab, cfg.limits);
    hs::model::Model<float> m(cfg, 61);
    hs::num::AdamState<float> adam;
    hs::train::TrainOptions opt;
    opt.batch = 16;
    opt.lr = 1e-3;
    opt.epochs = 36;
    opt.seed = 62;
    hs::train::train(m, adam, tr, opt);
    r.recall = 100.0 * hs::eval::evaluate_corpus(generate_all(m, te, vocab), references(test_set)).mean.r1.recall;
    detail += std::string(detail.empty() ? "" : ", ") + r.name + fmt(" %.2f", r.recall);
    std::fprintf(stderr, "  [6] %s R1 recall %.2f (%.0f s elapsed)\n", r.name, r.recall, seconds_since(t0));
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = runs[0].recall >= runs[3].recall - 0.5 && runs[1].recall <= runs[0].recall &&
           runs[2].recall <= runs[0].recall && secs < 1800.0;
  o.detail = std::to_string(train_set.size()) + "/" + std::to_string(test_set.size()) +
             " train/test instances; held-out R1 recall: " + detail + fmt("; %.0f s", secs);
  return o;
}

Outcome density_ordering() {
  CorpusInstance x;
  x.posts = {"p1", "p2", "p3", "p4", "p5", "p6"};
  x.thread_ids = {0, 1, 1, 0, 0, 0};
  x.summaries = {"thread1", "thread2"};
  const auto y = hs::corpus::density_order(x);
  if (y.summaries != std::vector<std::string>{"thread2", "thread1"}) return {false, "worked example not reordered"};

  hs::Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const auto docs = oracle::labelled_docs(5, 5, static_cast<std::uint64_t>(trial), 3);
    const auto z = hs::corpus::density_order(hs::corpus::interleave_window(docs, InterleavePreset::hard(), rng));
    if (z.summaries != oracle::brute_force_density(z)) return {false, "brute force disagrees at " + std::to_string(trial)};
  }
  return {true, "worked example gives (thread2, thread1); 500 random instances match the brute-force scan"};
}

Outcome cli_determinism() {
  std::vector<std::string> failures;
  const auto a = pipeline::run_all(pipeline::scratch("acc_a"), "13", &failures);
  const auto b = pipeline::run_all(pipeline::scratch("acc_b"), "13", &failures);
  std::filesystem::remove_all(pipeline::scratch("acc_a"));
  std::filesystem::remove_all(pipeline::scratch("acc_b"));
  if (!failures.empty()) return {false, failures.front()};
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second != bytes) return {false, name + " differs between runs"};
  }
  if (a.size() != b.size()) return {false, "artifact sets differ"};
  return {true, std::to_string(a.size()) + " artifacts from all seven subcommands byte-identical across two runs"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient fidelity", gradient_fidelity},   {"attention invariants", attention_invariants},
      {"interleaver correctness", interleaver},   {"ROUGE oracle equivalence", rouge_oracles},
      {"desk-scale learning", desk_scale_learning}, {"ordering direction", ordering_direction},
      {"density ordering", density_ordering},     {"determinism", cli_determinism}};
  std::vector<bool> selected(criteria.size(), argc == 1);
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "usage: %s [criterion numbers 1-%zu]\n", argv[0], criteria.size());
      return 2;
    }
    selected[static_cast<std::size_t>(k - 1)] = true;
  }

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %zu (%s): %s | %s\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
