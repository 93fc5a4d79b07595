#pragma once

// Command-line front end. `run_cli` is the whole program; main() only
// forwards argv and the standard streams so tests can drive it in-process.

#include <CLI11.hpp>

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "hiersumm/corpus.hpp"
#include "hiersumm/errors.hpp"
#include "hiersumm/model.hpp"
#include "hiersumm/textproc.hpp"
#include "hiersumm/train_eval.hpp"

namespace hiersumm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUser = 1;
inline constexpr int kExitInternal = 2;

struct SynthArgs {
  std::string in, out, preset = "hard", ordering = "first";
  std::vector<int> custom;
  std::uint64_t seed = 0;
  std::size_t max_instances = 0, stride = 1;
};

struct ToyArgs {
  std::string out;
  std::size_t count = 100, sentences = 5;
  std::uint64_t seed = 0;
};

struct VocabArgs {
  std::string corpus, out;
  std::size_t max_size = 8000;
};

/// Architecture flags shared by train and gradcheck.
struct ModelArgs {
  std::string variant = "hier2hier";
  bool no_gamma = false, no_beta = false, gamma_softmax = false;
  double lambda = 1.0, dropout = 0.1;
  std::size_t dim = 100;

  model::ModelConfig config() const {
    model::ModelConfig c;
    c.variant = model::variant_from_string(variant);
    c.d = dim;
    c.lambda = lambda;
    c.dropout = dropout;
    const bool seq = c.variant == model::Variant::kSeq2Seq;
    c.gamma_enabled = !no_gamma && !seq;
    c.beta_enabled = !no_beta && !seq;
    if (gamma_softmax) {
      if (seq || no_gamma) throw ConfigError("--gamma-softmax needs an enabled gamma gate");
      c.gamma_mode = model::GammaMode::kSoftmax;
    }
    return c;
  }
};

struct TrainArgs {
  ModelArgs model;
  std::string corpus, vocab, out, loss_log, precision = "f32";
  double lr = 1e-4, clip = 5.0;
  std::size_t batch = 64, epochs = 1, max_steps = 0, log_every = 50;
  std::size_t p = 20, q = 15, max_posts = 0, max_threads = 0, flat = 300, thread_cap = 5;
  std::uint64_t seed = 0;
};

struct GenerateArgs {
  std::string checkpoint, input, out, trace;
};

struct EvalArgs {
  std::string gen, ref, mode = "recall", out, per_instance;
  std::size_t budget = 0;
  bool paired = false;
};

struct GradcheckArgs {
  ModelArgs model;
  std::uint64_t seed = 0;
  std::size_t vocab = 20, posts = 4, p = 5, q = 4, threads = 2;
  double h = 1e-5;
};

namespace detail {

inline void require_file(const std::string& path, const char* what) {
  if (!std::filesystem::is_regular_file(path)) throw InvalidInput(std::string(what) + " '" + path + "' does not exist");
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  return out;
}

/// Every non-empty line's "summaries" array. Reads corpus files and
/// generation files alike.
inline std::vector<std::vector<std::string>> read_summaries(const std::string& path) {
  require_file(path, "summary file");
  std::ifstream in(path, std::ios::binary);
  std::vector<std::vector<std::string>> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      out.push_back(j.at("summaries").template get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(n, path + ": expected an object with a 'summaries' string array (" + e.what() + ")");
    }
  }
  return out;
}

/// Flat `key = value` lines; `#` starts a comment; values may be quoted.
/// Keys are long flag names without the dashes. Options already given on the
/// command line keep their value.
inline void apply_config_file(CLI::App* sub, const std::string& path) {
  require_file(path, "config file");
  std::ifstream in(path, std::ios::binary);
  std::string line;
  std::size_t n = 0;
  auto trim = [](std::string x) {
    const auto b = x.find_first_not_of(" \t\r");
    const auto e = x.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : x.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(n) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    CLI::Option* opt = key == "config" ? nullptr : sub->get_option_no_throw("--" + key);
    if (!opt) throw ConfigError(path + ":" + std::to_string(n) + ": unknown key '" + key + "' for " + sub->get_name());
    if (opt->count() > 0) continue;
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError(path + ":" + std::to_string(n) + ": bad value for '" + key + "': " + e.what());
    }
  }
}

inline void add_model_flags(CLI::App* sub, ModelArgs& m) {
  sub->add_option("--variant", m.variant, "seq2seq | seq2hier | hier2seq | hier2hier")
      ->check(CLI::IsMember({"seq2seq", "seq2hier", "hier2seq", "hier2hier"}));
  sub->add_flag("--no-gamma", m.no_gamma, "disable the post-level gate");
  sub->add_flag("--no-beta", m.no_beta, "disable the word-level gate");
  sub->add_flag("--gamma-softmax", m.gamma_softmax, "normalise the post gate with softmax");
  sub->add_option("--lambda", m.lambda, "weight of the stop loss");
  sub->add_option("--dropout", m.dropout, "dropout on the thread-state projection");
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_synth(const SynthArgs& a, std::ostream& err) {
  detail::require_file(a.in, "document file");
  corpus::SynthesisConfig cfg;
  if (!a.custom.empty()) {
    cfg.preset = {a.custom[0], a.custom[1], a.custom[2], a.custom[3]};
  } else {
    cfg.preset = corpus::InterleavePreset::by_name(a.preset);
  }
  if (a.ordering == "density") cfg.preset.ordering = corpus::SummaryOrdering::kDensity;
  cfg.seed = a.seed;
  cfg.max_instances = a.max_instances;
  cfg.window_stride = a.stride;

  corpus::DocReadReport report;
  const auto docs = corpus::read_docs(a.in, &report);
  if (report.skipped) err << "synth: skipped " << report.skipped << " malformed records\n";
  const auto c = corpus::synthesize_corpus(docs, cfg);
  corpus::write_corpus(a.out, c);
  err << "synth: " << c.splits[0].size() << " train, " << c.splits[1].size() << " eval, " << c.splits[2].size()
      << " test instances -> " << a.out << "\n";
  return kExitOk;
}

inline int cmd_toydocs(const ToyArgs& a, std::ostream& err) {
  corpus::ToyDocOptions o;
  o.sentences_per_doc = a.sentences;
  const auto docs = corpus::make_toy_docs(a.count, a.seed, o);
  auto out = detail::open_out(a.out);
  for (const auto& d : docs) out << corpus::serialize_doc(d) << '\n';
  err << "toydocs: " << docs.size() << " documents -> " << a.out << "\n";
  return kExitOk;
}

inline int cmd_vocab(const VocabArgs& a, std::ostream& err) {
  detail::require_file(a.corpus, "corpus");
  const auto v = text::build_vocab(corpus::read_instances(a.corpus), a.max_size);
  text::save_vocab(a.out, v);
  err << "vocab: " << v.size() << " entries -> " << a.out << "\n";
  return kExitOk;
}

template <typename T>
int run_train(const TrainArgs& a, const model::ModelConfig& cfg, const text::Vocab& vocab,
              const std::vector<text::EncodedInstance>& data, std::ostream& err) {
  model::Model<T> m(cfg, a.seed);
  num::AdamState<T> adam;
  train::TrainOptions opt;
  opt.batch = a.batch;
  opt.lr = a.lr;
  opt.epochs = a.epochs;
  opt.max_steps = a.max_steps;
  opt.clip = a.clip;
  opt.seed = a.seed;

  std::size_t step = 0;
  auto progress = [&](std::size_t epoch) {
    return nlohmann::json{{"precision", a.precision}, {"epoch", epoch}, {"step", step}, {"seed", a.seed}};
  };
  train::TrainHooks hooks;
  hooks.on_step = [&](const train::StepLog& s) {
    step = s.step;
    if (a.log_every && s.step % a.log_every == 0) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "step %zu  loss %.4f  avg %.4f  nll/token %.4f  stop %.4f\n", s.step, s.loss,
                    s.running_avg_loss, s.nll, s.stop_bce);
      err << buf;
    }
  };
  hooks.on_epoch = [&](std::size_t epoch) {
    train::save_checkpoint(a.out, m, vocab, &adam, progress(epoch));
    err << "epoch " << epoch << " done, checkpoint -> " << a.out << "\n";
  };
  const auto res = train::train(m, adam, data, opt, hooks);
  train::save_checkpoint(a.out, m, vocab, &adam, progress(res.epochs_completed));
  train::write_loss_csv(a.loss_log.empty() ? a.out + ".loss.csv" : a.loss_log, res.log);
  if (res.diverged) {
    err << "train: aborted at step " << res.steps << ", loss stayed above 10x its initial value\n";
    return kExitUser;
  }
  err << "train: " << res.steps << " steps\n";
  return kExitOk;
}

inline int cmd_train(const TrainArgs& a, std::ostream& err) {
  detail::require_file(a.corpus, "corpus");
  detail::require_file(a.vocab, "vocab");
  auto cfg = a.model.config();
  cfg.limits = {a.p, a.q, a.max_posts, a.max_threads, a.flat};
  cfg.thread_cap = a.thread_cap;
  const auto vocab = text::load_vocab(a.vocab);
  cfg.vocab_size = vocab.size();
  cfg.validate();

  const auto raw = corpus::read_instances(a.corpus);
  std::vector<text::EncodedInstance> data;
  data.reserve(raw.size());
  for (const auto& x : raw) data.push_back(text::encode_instance(x, vocab, cfg.limits));
  err << "train: " << cfg.label() << ", " << data.size() << " instances, vocab " << vocab.size() << "\n";
  if (a.precision == "f64") return run_train<double>(a, cfg, vocab, data, err);
  return run_train<float>(a, cfg, vocab, data, err);
}

template <typename T>
int run_generate(const GenerateArgs& a, train::LoadedCheckpoint<T> ck, std::ostream& err) {
  const auto raw = corpus::read_instances(a.input);
  auto out = detail::open_out(a.out);
  std::optional<std::ofstream> trace;
  if (!a.trace.empty()) trace = detail::open_out(a.trace);
  const auto& lim = ck.model.config().limits;
  std::size_t forced = 0;
  for (const auto& x : raw) {
    const auto e = text::encode_instance(x, ck.vocab, lim);
    model::Trace t;
    const auto g = ck.model.generate(e, trace ? &t : nullptr);
    nlohmann::json j = {{"summaries", nlohmann::json::array()}, {"forced_stop", g.forced_stop}};
    for (const auto& s : g.summaries) j["summaries"].push_back(text::decode_ids(s, ck.vocab));
    out << j.dump() << '\n';
    if (trace) *trace << model::trace_to_json(t, ck.vocab).dump() << '\n';
    forced += g.forced_stop;
  }
  err << "generate: " << raw.size() << " instances -> " << a.out;
  if (forced) err << " (" << forced << " hit the thread cap)";
  err << "\n";
  return kExitOk;
}

inline int cmd_generate(const GenerateArgs& a, std::ostream& err) {
  detail::require_file(a.checkpoint, "checkpoint");
  detail::require_file(a.input, "input corpus");
  std::ifstream in(a.checkpoint, std::ios::binary);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("checkpoint '" + a.checkpoint + "' is not valid JSON: " + e.what());
  }
  const bool f64 = j.contains("progress") && j["progress"].value("precision", "f32") == "f64";
  if (f64) return run_generate(a, train::checkpoint_from_json<double>(j), err);
  return run_generate(a, train::checkpoint_from_json<float>(j), err);
}

inline int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  eval::EvalOptions opt;
  opt.mode = eval::score_mode_from_string(a.mode);
  opt.budget = a.budget;
  opt.paired = a.paired;
  const auto score = eval::evaluate_corpus(detail::read_summaries(a.gen), detail::read_summaries(a.ref), opt);
  if (score.count_mismatches) {
    err << "eval: " << score.count_mismatches << " instances have a different number of generated and reference "
        << "summaries\n";
  }
  const auto report = eval::report_json(score, opt).dump(2) + "\n";
  if (a.out.empty()) {
    out << report;
  } else {
    detail::open_out(a.out) << report;
  }
  if (!a.per_instance.empty()) {
    auto pi = detail::open_out(a.per_instance);
    for (std::size_t i = 0; i < score.per_instance.size(); ++i) {
      const auto& s = score.per_instance[i];
      nlohmann::json j = eval::score_json(s.score);
      j["instance"] = i;
      j["generated"] = s.generated;
      j["references"] = s.references;
      pi << j.dump() << '\n';
    }
  }
  return kExitOk;
}

inline int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  auto cfg = a.model.config();
  cfg.vocab_size = a.vocab;
  cfg.limits.p = a.p;
  cfg.limits.q = a.q;
  cfg.dropout = 0.0;
  cfg.validate();
  train::SyntheticShape shape;
  shape.posts = a.posts;
  shape.threads = a.threads;
  const auto r = train::gradcheck_model(cfg, a.seed, shape, a.h);
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s d=%zu scalars=%zu max_rel_error=%.3e worst=%s[%zu] %s (threshold %.0e)\n",
                cfg.label().c_str(), cfg.d, r.report.scalars_checked, r.report.max_rel_error,
                r.report.worst_parameter.c_str(), r.report.worst_index, r.pass ? "PASS" : "FAIL",
                train::kModelGradcheckTolerance);
  out << buf;
  return r.pass ? kExitOk : kExitUser;
}

// ---------------------------------------------------------------------------

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"hiersumm: interleaved-text corpora, hierarchical summarisation models and ROUGE"};
  app.name("hiersumm");
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.option_defaults()->always_capture_default();

  std::vector<std::pair<CLI::App*, std::string>> configs;
  auto with_config = [&](CLI::App* sub) {
    auto& slot = configs.emplace_back(sub, std::string());
    sub->add_option("--config", slot.second, "flat key = value file; command-line flags win");
    return sub;
  };
  configs.reserve(8);

  SynthArgs synth;
  auto* s = with_config(app.add_subcommand("synth", "interleave documents into a three-way split corpus"));
  s->add_option("--in", synth.in, "document JSONL {sentences, title}")->required();
  s->add_option("--out", synth.out, "output directory")->required();
  s->add_option("--preset", synth.preset, "easy | medium | hard")->check(CLI::IsMember({"easy", "medium", "hard"}));
  s->add_option("--custom", synth.custom, "explicit a,b,m,n instead of a preset")->expected(4)->delimiter(',');
  s->add_option("--ordering", synth.ordering, "summary order: first | density")
      ->check(CLI::IsMember({"first", "density"}));
  s->add_option("--seed", synth.seed, "random seed");
  s->add_option("--max-instances", synth.max_instances, "cap per split (0 = none)");
  s->add_option("--stride", synth.stride, "window stride over documents");

  ToyArgs toy;
  auto* t = with_config(app.add_subcommand("toydocs", "write a small synthetic document collection"));
  t->add_option("--out", toy.out, "document JSONL")->required();
  t->add_option("--count", toy.count, "documents");
  t->add_option("--sentences", toy.sentences, "sentences per document");
  t->add_option("--seed", toy.seed, "random seed");

  VocabArgs voc;
  auto* v = with_config(app.add_subcommand("vocab", "build a vocabulary from a corpus split"));
  v->add_option("--corpus", voc.corpus, "corpus JSONL")->required();
  v->add_option("--max-size", voc.max_size, "entries including the 5 specials");
  v->add_option("--out", voc.out, "vocab file")->required();

  TrainArgs tr;
  auto* r = with_config(app.add_subcommand("train", "train a model with Adam"));
  r->add_option("--corpus", tr.corpus, "training corpus JSONL")->required();
  r->add_option("--vocab", tr.vocab, "vocab file")->required();
  r->add_option("--out", tr.out, "checkpoint path, rewritten after every epoch")->required();
  detail::add_model_flags(r, tr.model);
  r->add_option("--dim", tr.model.dim, "embedding and hidden size d");
  r->add_option("--lr", tr.lr, "Adam learning rate");
  r->add_option("--batch", tr.batch, "instances per step");
  r->add_option("--epochs", tr.epochs, "passes over the corpus");
  r->add_option("--max-steps", tr.max_steps, "stop after this many steps (0 = none)");
  r->add_option("--clip", tr.clip, "global gradient-norm clip (0 = off)");
  r->add_option("--seed", tr.seed, "random seed");
  r->add_option("--p", tr.p, "words kept per post");
  r->add_option("--q", tr.q, "words kept per summary");
  r->add_option("--max-posts", tr.max_posts, "posts kept per instance (0 = all)");
  r->add_option("--max-threads", tr.max_threads, "reject instances with more summaries (0 = no limit)");
  r->add_option("--flat", tr.flat, "flattened source length for seq2* encoders");
  r->add_option("--thread-cap", tr.thread_cap, "summaries generated at most");
  r->add_option("--precision", tr.precision, "f32 | f64")->check(CLI::IsMember({"f32", "f64"}));
  r->add_option("--loss-log", tr.loss_log, "loss CSV (default <out>.loss.csv)");
  r->add_option("--log-every", tr.log_every, "progress line interval in steps (0 = quiet)");

  GenerateArgs gen;
  auto* g = with_config(app.add_subcommand("generate", "greedy decoding with a trained checkpoint"));
  g->add_option("--checkpoint", gen.checkpoint, "checkpoint file")->required();
  g->add_option("--input", gen.input, "corpus JSONL")->required();
  g->add_option("--out", gen.out, "JSONL of {summaries, forced_stop}")->required();
  g->add_option("--trace", gen.trace, "optional attention-trace JSONL");

  EvalArgs ev;
  auto* e = with_config(app.add_subcommand("eval", "ROUGE-1/2/L of generated against reference summaries"));
  e->add_option("--gen", ev.gen, "generated JSONL")->required();
  e->add_option("--ref", ev.ref, "reference corpus JSONL")->required();
  e->add_option("--mode", ev.mode, "headline score: recall | f1")->check(CLI::IsMember({"recall", "f1"}));
  e->add_option("--budget", ev.budget, "candidate token budget (0 = none; 150 for AMI-style runs)");
  e->add_flag("--paired", ev.paired, "score summary k against reference k");
  e->add_option("--out", ev.out, "report path (default stdout)");
  e->add_option("--per-instance", ev.per_instance, "per-instance JSONL");

  GradcheckArgs gc;
  gc.model.dim = 8;
  auto* c = with_config(app.add_subcommand("gradcheck", "finite-difference check of the full model gradient"));
  detail::add_model_flags(c, gc.model);
  c->add_option("--dim", gc.model.dim, "embedding and hidden size d");
  c->add_option("--seed", gc.seed, "random seed");
  c->add_option("--vocab", gc.vocab, "vocab size");
  c->add_option("--posts", gc.posts, "posts in the synthetic instance");
  c->add_option("--p", gc.p, "words per post");
  c->add_option("--q", gc.q, "words per summary");
  c->add_option("--threads", gc.threads, "reference summaries");
  c->add_option("--step", gc.h, "finite-difference step h");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex, out, err) == 0 ? kExitOk : kExitUser;
  }

  try {
    for (auto& [sub, path] : configs) {
      if (*sub && !path.empty()) detail::apply_config_file(sub, path);
    }
    if (*s) return cmd_synth(synth, err);
    if (*t) return cmd_toydocs(toy, err);
    if (*v) return cmd_vocab(voc, err);
    if (*r) return cmd_train(tr, err);
    if (*g) return cmd_generate(gen, err);
    if (*e) return cmd_eval(ev, out, err);
    if (*c) return cmd_gradcheck(gc, out);
  } catch (const DimensionError& ex) {
    err << "internal error: " << ex.what() << "\n";
    return kExitInternal;
  } catch (const InvalidInput& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUser;
  } catch (const ConfigError& ex) {
    err << "configuration error: " << ex.what() << "\n";
    return kExitUser;
  } catch (const NumericalError& ex) {
    err << "numerical error: " << ex.what() << "\n";
    return kExitUser;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUser;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, out, err);
}

}  // namespace hiersumm::cli
