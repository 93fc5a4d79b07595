#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "hiersumm/corpus.hpp"
#include "support/corpus_oracles.hpp"

namespace hs = hiersumm;
using namespace hiersumm::corpus;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hiersumm_corpus_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

CorpusInstance with_threads(const std::vector<int>& ids) {
  CorpusInstance x;
  int threads = 0;
  for (int t : ids) threads = std::max(threads, t + 1);
  for (std::size_t i = 0; i < ids.size(); ++i) x.posts.push_back("p" + std::to_string(i));
  x.thread_ids = ids;
  for (int k = 0; k < threads; ++k) x.summaries.push_back("s" + std::to_string(k));
  return x;
}

}  // namespace

TEST(Window, CountsAndContents) {
  std::vector<int> xs = {1, 2, 3, 4, 5};
  auto w = window(std::span<const int>(xs), 3, 1);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(std::vector<int>(w[0].begin(), w[0].end()), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(std::vector<int>(w[2].begin(), w[2].end()), (std::vector<int>{3, 4, 5}));

  std::vector<int> six = {1, 2, 3, 4, 5, 6};
  std::vector<std::vector<int>> got;
  for (auto s : window(std::span<const int>(six), 2, 2)) got.emplace_back(s.begin(), s.end());
  EXPECT_EQ(got, (std::vector<std::vector<int>>{{1, 2}, {3, 4}, {5, 6}}));

  EXPECT_EQ(window(std::span<const int>(xs), 5, 1).size(), 1u);
  EXPECT_EQ(window(std::span<const int>(xs), 6, 1).size(), 0u);
  EXPECT_THROW(window(std::span<const int>(xs), 0, 1), hs::InvalidInput);
}

TEST(Window, CountMatchesFormulaForAllSmallShapes) {
  std::vector<int> xs(40);
  for (std::size_t len = 0; len <= xs.size(); ++len) {
    for (std::size_t w = 1; w <= 8; ++w) {
      for (std::size_t t = 1; t <= 5; ++t) {
        auto win = window(std::span<const int>(xs.data(), len), w, t);
        std::size_t expect = len < w ? 0 : (len - w) / t + 1;
        std::size_t walked = 0;
        for (auto it = win.begin(); it != win.end(); ++it) ++walked;
        ASSERT_EQ(win.size(), expect);
        ASSERT_EQ(walked, expect);
      }
    }
  }
}

TEST(Interleave, StubTraceReproducesHandExample) {
  auto docs = oracle::labelled_docs(3, 4);
  // r=3, q=(2,2,2), draws D1,D2,D3,D1,D2,D3 (0-based indices here).
  oracle::ScriptedRandom stub({3, 2, 2, 2}, {0, 1, 2, 0, 1, 2});
  InterleavePreset p{2, 3, 2, 5};
  auto x = interleave_window(docs, p, stub);
  EXPECT_EQ(x.posts, (std::vector<std::string>{"doc 0 sentence 0", "doc 1 sentence 0", "doc 2 sentence 0",
                                               "doc 0 sentence 1", "doc 1 sentence 1", "doc 2 sentence 1"}));
  EXPECT_EQ(x.summaries, (std::vector<std::string>{"title 0", "title 1", "title 2"}));
  EXPECT_EQ(x.thread_ids, (std::vector<int>{0, 1, 2, 0, 1, 2}));
  EXPECT_TRUE(stub.exhausted());
}

TEST(Interleave, SummariesFollowFirstAppearance) {
  auto docs = oracle::labelled_docs(2, 5);
  oracle::ScriptedRandom stub({2, 1, 1}, {1, 0});
  auto x = interleave_window(docs, InterleavePreset{2, 2, 1, 5}, stub);
  EXPECT_EQ(x.summaries, (std::vector<std::string>{"title 1", "title 0"}));
  EXPECT_EQ(x.thread_ids, (std::vector<int>{0, 1}));
}

TEST(Interleave, DuplicateTitlesShareOneSummary) {
  auto docs = oracle::labelled_docs(2, 5);
  docs[1].title = docs[0].title;
  oracle::ScriptedRandom stub({2, 1, 1}, {0, 1});
  auto x = interleave_window(docs, InterleavePreset{2, 2, 1, 5}, stub);
  EXPECT_EQ(x.summaries.size(), 1u);
  EXPECT_EQ(x.thread_ids, (std::vector<int>{0, 0}));
}

TEST(Interleave, WindowTooSmallOrDocTooShort) {
  auto docs = oracle::labelled_docs(2, 3);
  hs::Rng rng(1);
  EXPECT_THROW(interleave_window(std::span<const SourceDoc>(docs).first(1), InterleavePreset::easy(), rng),
               hs::InvalidInput);
  EXPECT_THROW(interleave_window(docs, InterleavePreset::easy(), rng), hs::InvalidInput);
}

TEST(Interleave, EasyAlwaysTenPostsTwoSummaries) {
  auto docs = oracle::labelled_docs(2, 5);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    hs::Rng rng(seed);
    auto x = interleave_window(docs, InterleavePreset::easy(), rng);
    ASSERT_EQ(x.posts.size(), 10u);
    ASSERT_EQ(x.summaries.size(), 2u);
  }
}

TEST(Interleave, HardInstancesSatisfyInvariants) {
  auto docs = oracle::labelled_docs(5, 5, 3, 4);
  const auto p = InterleavePreset::hard();
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    hs::Rng rng(seed);
    auto x = interleave_window(docs, p, rng);
    ASSERT_EQ(oracle::check_instance(x, docs, p, true), "") << "seed " << seed;
  }
}

// Wraps a generator and, before every draw, checks that the multiset counts
// equal the unemitted sentences of each document.
class AuditingRandom final : public hs::RandomSource {
 public:
  AuditingRandom(hs::RandomSource& inner, const std::vector<SourceDoc>& docs) : inner_(inner), docs_(docs) {}
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) override {
    auto v = inner_.uniform_int(lo, hi);
    if (stage_ == 0) {
      r_ = static_cast<std::size_t>(v);
    } else {
      q_.push_back(static_cast<std::size_t>(v));
    }
    ++stage_;
    return v;
  }
  std::size_t choose_weighted(std::span<const std::size_t> counts) override {
    if (counts.size() != r_) ok = false;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (counts[k] != q_[k] - emitted_[k]) ok = false;
    }
    auto k = inner_.choose_weighted(counts);
    emitted_[k] += 1;
    return k;
  }
  void reset() {
    stage_ = 0;
    q_.clear();
    emitted_.assign(8, 0);
  }
  bool ok = true;

 private:
  hs::RandomSource& inner_;
  const std::vector<SourceDoc>& docs_;
  int stage_ = 0;
  std::size_t r_ = 0;
  std::vector<std::size_t> q_;
  std::vector<std::size_t> emitted_ = std::vector<std::size_t>(8, 0);
};

TEST(Interleave, MultisetTracksUnemittedSentences) {
  auto docs = oracle::labelled_docs(5, 5);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    hs::Rng rng(seed);
    AuditingRandom audit(rng, docs);
    audit.reset();
    interleave_window(docs, InterleavePreset::hard(), audit);
    ASSERT_TRUE(audit.ok) << "seed " << seed;
  }
}

TEST(Density, PaperWorkedExample) {
  // 1-based positions: t1 at 1,4,5,6 and t2 at 2,3.
  auto x = with_threads({0, 1, 1, 0, 0, 0});
  auto y = density_order(x);
  EXPECT_EQ(y.summaries, (std::vector<std::string>{"s1", "s0"}));
  EXPECT_EQ(y.posts, x.posts);
  EXPECT_EQ(y.thread_ids, (std::vector<int>{1, 0, 0, 1, 1, 1}));
}

TEST(Density, SingleThreadUnchanged) {
  auto x = with_threads({0, 0, 0});
  EXPECT_EQ(density_order(x), x);
}

TEST(Density, AlternatingTieKeepsFirstOccurrence) {
  auto x = with_threads({0, 1, 0, 1, 0, 1, 0, 1});
  // Oracle agrees on the tie-break before we compare against it.
  EXPECT_EQ(oracle::brute_force_density(x), (std::vector<std::string>{"s0", "s1"}));
  EXPECT_EQ(density_order(x).summaries, (std::vector<std::string>{"s0", "s1"}));
}

TEST(Density, MatchesBruteForceOnRandomInstances) {
  hs::Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    auto docs = oracle::labelled_docs(5, 5, static_cast<std::uint64_t>(trial), 3);
    auto x = interleave_window(docs, InterleavePreset::hard(), rng);
    auto y = density_order(x);
    ASSERT_EQ(y.summaries, oracle::brute_force_density(x)) << "trial " << trial;
    ASSERT_EQ(oracle::check_instance(y, docs, InterleavePreset::hard(), false), "") << "trial " << trial;
  }
}

TEST(Jsonl, MinimalRoundTrip) {
  CorpusInstance x = with_threads({0, 0});
  x.meta = {{"seed", 3}};
  auto line = serialize_instance(x);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_EQ(parse_instance(line), x);
}

TEST(Jsonl, Utf8QuotesAndNewlinesSurvive) {
  CorpusInstance x;
  x.posts = {"she said \"hi\"\nthen left", "caf\xC3\xA9 \xE2\x80\x94 \xF0\x9F\x98\x80", "back\\slash\ttab"};
  x.thread_ids = {0, 1, 0};
  x.summaries = {"t\"1\"", "\xCE\xB1\xCE\xB2"};
  auto line = serialize_instance(x);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_EQ(parse_instance(line), x);
}

TEST(Jsonl, SchemaErrorsCarryLineNumber) {
  std::stringstream in;
  in << serialize_instance(with_threads({0})) << "\n"
     << R"({"posts":["a","b"],"thread_ids":[0],"summaries":["s"],"meta":{}})" << "\n";
  try {
    read_instances(in);
    FAIL() << "expected SchemaError";
  } catch (const hs::SchemaError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_instance(R"({"posts":[],"thread_ids":[],"meta":{}})", 4), hs::SchemaError);
  EXPECT_THROW(parse_instance("not json", 1), hs::SchemaError);
  EXPECT_THROW(parse_instance(R"({"posts":["a"],"thread_ids":[3],"summaries":["s"],"meta":{}})"), hs::SchemaError);
}

TEST(Jsonl, DocReaderSkipsMalformedUpToTenPercent) {
  auto good = serialize_doc(SourceDoc{0, {"a ."}, "t"});
  std::stringstream ok;
  for (int i = 0; i < 10; ++i) ok << good << "\n";
  ok << "{broken\n";
  DocReadReport rep;
  auto docs = read_docs(ok, &rep);
  EXPECT_EQ(docs.size(), 10u);
  EXPECT_EQ(rep.records, 11u);
  EXPECT_EQ(rep.skipped, 1u);
  EXPECT_EQ(docs.back().id, 9);

  std::stringstream bad;
  for (int i = 0; i < 8; ++i) bad << good << "\n";
  bad << R"({"sentences":[],"title":"x"})" << "\n" << R"({"title":"x"})" << "\n";
  EXPECT_THROW(read_docs(bad), hs::InvalidInput);
}

TEST(Synthesize, DeterministicFilesForSameSeed) {
  auto docs = make_toy_docs(100, 5);
  SynthesisConfig cfg;
  cfg.seed = 7;
  auto a = scratch_dir("det_a"), b = scratch_dir("det_b");
  write_corpus(a, synthesize_corpus(docs, cfg));
  write_corpus(b, synthesize_corpus(docs, cfg));
  for (const char* f : {"train.jsonl", "eval.jsonl", "test.jsonl", "stats.json"}) {
    auto x = slurp(a / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, slurp(b / f)) << f;
  }
  cfg.seed = 8;
  write_corpus(b, synthesize_corpus(docs, cfg));
  EXPECT_NE(slurp(a / "train.jsonl"), slurp(b / "train.jsonl"));
}

TEST(Synthesize, SplitsAreDocumentDisjoint) {
  auto docs = make_toy_docs(300, 2);
  SynthesisConfig cfg;
  cfg.preset = InterleavePreset::hard();
  cfg.seed = 11;
  auto c = synthesize_corpus(docs, cfg);
  std::array<std::set<std::int64_t>, 3> ids;
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_FALSE(c.splits[s].empty());
    for (const auto& x : c.splits[s]) {
      for (const auto& id : x.meta.at("source_ids")) ids[s].insert(id.get<std::int64_t>());
    }
  }
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t t = s + 1; t < 3; ++t) {
      for (auto id : ids[s]) EXPECT_EQ(ids[t].count(id), 0u) << "doc " << id;
    }
  }
  // 300 docs split 240/30/30, windows of 5 with stride 1.
  EXPECT_EQ(c.splits[0].size(), 236u);
  EXPECT_EQ(c.splits[1].size(), 26u);
  EXPECT_EQ(c.splits[2].size(), 26u);
}

TEST(Synthesize, ShortDocsFilteredAndCapApplied) {
  auto docs = oracle::labelled_docs(50, 4);
  for (std::size_t i = 0; i < docs.size(); i += 2) docs[i].sentences.push_back("extra");
  SynthesisConfig cfg;
  cfg.split_ratios = {1.0, 0.0, 0.0};
  auto c = synthesize_corpus(docs, cfg);
  EXPECT_EQ(c.stats["docs_too_short"], 25);
  EXPECT_EQ(c.splits[0].size(), 24u);
  for (const auto& x : c.splits[0]) {
    for (const auto& id : x.meta.at("source_ids")) EXPECT_EQ(id.get<std::int64_t>() % 2, 0);
  }
  cfg.max_instances = 5;
  auto capped = synthesize_corpus(docs, cfg);
  ASSERT_EQ(capped.splits[0].size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(capped.splits[0][i], c.splits[0][i]);
}

TEST(Synthesize, MediumMeanThreadCount) {
  auto docs = oracle::labelled_docs(12003, 5);
  SynthesisConfig cfg;
  cfg.preset = InterleavePreset::medium();
  cfg.split_ratios = {1.0, 0.0, 0.0};
  cfg.seed = 2024;
  auto c = synthesize_corpus(docs, cfg);
  ASSERT_GE(c.splits[0].size(), 10000u);
  const double mean = c.stats["splits"]["train"]["mean_threads"].get<double>();
  EXPECT_GE(mean, 2.4);
  EXPECT_LE(mean, 2.6);
}

TEST(Synthesize, DensityOrderingPreset) {
  auto docs = oracle::labelled_docs(40, 5);
  SynthesisConfig cfg;
  cfg.preset = InterleavePreset::hard();
  cfg.preset.ordering = SummaryOrdering::kDensity;
  cfg.split_ratios = {1.0, 0.0, 0.0};
  auto c = synthesize_corpus(docs, cfg);
  for (const auto& x : c.splits[0]) ASSERT_EQ(x.summaries, oracle::brute_force_density(x));
}

TEST(Synthesize, BadConfigRejected) {
  SynthesisConfig cfg;
  cfg.split_ratios = {0.5, 0.2, 0.2};
  EXPECT_THROW(synthesize_corpus({}, cfg), hs::ConfigError);
  EXPECT_THROW(InterleavePreset::by_name("extreme"), hs::ConfigError);
  InterleavePreset p{1, 2, 2, 5};
  EXPECT_THROW(p.validate(), hs::ConfigError);
}

TEST(ToyDocs, TitlesAppearInEverySentence) {
  auto docs = make_toy_docs(50, 1);
  for (const auto& d : docs) {
    auto space = d.title.find(' ');
    auto subject = d.title.substr(0, space);
    auto attribute = d.title.substr(d.title.rfind(' ') + 1);
    ASSERT_EQ(d.sentences.size(), 5u);
    for (const auto& s : d.sentences) {
      EXPECT_NE(s.find(subject), std::string::npos);
      EXPECT_NE(s.find(attribute), std::string::npos);
      EXPECT_LT(s.find(subject), s.find(attribute));
    }
  }
}
