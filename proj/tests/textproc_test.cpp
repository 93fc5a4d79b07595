#include <gtest/gtest.h>

#include <filesystem>

#include "hiersumm/random.hpp"
#include "hiersumm/textproc.hpp"

namespace hs = hiersumm;
using namespace hiersumm::text;
using hiersumm::corpus::CorpusInstance;

namespace {

using Tokens = std::vector<std::string>;

CorpusInstance instance(std::vector<std::string> posts, std::vector<int> ids, std::vector<std::string> sums) {
  CorpusInstance x;
  x.posts = std::move(posts);
  x.thread_ids = std::move(ids);
  x.summaries = std::move(sums);
  return x;
}

}  // namespace

TEST(Tokenize, SeparatesPunctuationAndLowercases) {
  EXPECT_EQ(tokenize("Caffeine in Sport."), (Tokens{"caffeine", "in", "sport", "."}));
  EXPECT_EQ(tokenize(""), Tokens{});
  EXPECT_EQ(tokenize("a  b"), (Tokens{"a", "b"}));
  EXPECT_EQ(tokenize("(Yes!) \"x\", y; z: w? it's"),
            (Tokens{"(", "yes", "!", ")", "\"", "x", "\"", ",", "y", ";", "z", ":", "w", "?", "it", "'", "s"}));
  EXPECT_EQ(tokenize("Caf\xC3\x89 \tX\n"), (Tokens{"caf\xC3\x89", "x"}));
}

TEST(Vocab, SpecialsHaveFixedIds) {
  Vocab v;
  EXPECT_EQ(v.size(), 5u);
  EXPECT_EQ(v.token(kPad), "<pad>");
  EXPECT_EQ(v.token(kUnk), "[UNK]");
  EXPECT_EQ(v.token(kSos), "<sos>");
  EXPECT_EQ(v.token(kEos), "<eos>");
  EXPECT_EQ(v.token(kSep), "<sep>");
  EXPECT_EQ(v.id("<eos>"), kUnk);
  EXPECT_THROW(v.token(5), hs::InvalidInput);
  EXPECT_THROW(v.token(-1), hs::InvalidInput);
}

TEST(BuildVocab, ThreeTokensGiveSpecialsPlusThree) {
  auto x = instance({"a b", "b c"}, {0, 0}, {"a"});
  auto v = build_vocab({x}, 100);
  EXPECT_EQ(v.size(), 8u);
  EXPECT_EQ(v.token(5), "a");  // a:2, b:2 tie broken lexicographically, then c:1
  EXPECT_EQ(v.token(6), "b");
  EXPECT_EQ(v.token(7), "c");
}

TEST(BuildVocab, CutoffMapsToUnkAndIsDeterministic) {
  auto x = instance({"z z z y y x w"}, {0}, {"z"});
  auto v = build_vocab({x}, 7);
  EXPECT_EQ(v.size(), 7u);
  EXPECT_EQ(v.id("z"), 5);
  EXPECT_EQ(v.id("y"), 6);
  EXPECT_EQ(v.id("x"), kUnk);
  EXPECT_EQ(build_vocab({x}, 7), v);
  EXPECT_THROW(build_vocab({}, 10), hs::InvalidInput);
  EXPECT_THROW(build_vocab({x}, 4), hs::ConfigError);
}

TEST(BuildVocab, FileRoundTrip) {
  auto x = instance({"alpha beta gamma caf\xC3\xA9"}, {0}, {"alpha"});
  auto v = build_vocab({x}, 50);
  auto path = (std::filesystem::temp_directory_path() / "hiersumm_vocab_test.txt").string();
  save_vocab(path, v);
  EXPECT_EQ(load_vocab(path), v);
  EXPECT_EQ(vocab_from_json(vocab_to_json(v)), v);
}

TEST(Encode, TruncatesPadsAndLabels) {
  std::string long_post;
  for (int i = 0; i < 25; ++i) long_post += "w" + std::to_string(i) + " ";
  auto x = instance({long_post, "w1 w2"}, {0, 1}, {"w0 w1 w2", "w3"});
  auto v = build_vocab({x}, 100);
  auto e = encode_instance(x, v);
  ASSERT_EQ(e.posts.rows, 2u);
  ASSERT_EQ(e.posts.cols, 20u);
  EXPECT_EQ(e.post_len, (std::vector<std::size_t>{20, 2}));
  for (std::size_t j = 0; j < 20; ++j) EXPECT_EQ(e.posts.at(0, j), v.id("w" + std::to_string(j)));
  EXPECT_EQ(e.posts.at(1, 2), kPad);

  ASSERT_EQ(e.summaries.cols, 16u);
  auto row = e.summaries.row(0);
  EXPECT_EQ(row[0], v.id("w0"));
  EXPECT_EQ(row[3], kEos);
  for (std::size_t j = 4; j < 16; ++j) EXPECT_EQ(row[j], kPad);
  EXPECT_EQ(std::count(row.begin(), row.end(), kPad), 12);  // 3 words + EOS + 12 PAD = q + 1 columns
  EXPECT_EQ(e.summary_len(0), 3u);
  EXPECT_EQ(e.stop_labels, (std::vector<int>{0, 1}));
  EXPECT_EQ(e.flat_target, (std::vector<int>{v.id("w0"), v.id("w1"), v.id("w2"), kSep, v.id("w3"), kEos}));
  EXPECT_EQ(e.flat_source.size(), 25u + 1u + 2u);
  EXPECT_EQ(e.flat_source[25], kSep);
}

TEST(Encode, StopLabelsMarkLastThread) {
  auto x = instance({"a", "b", "c"}, {0, 1, 2}, {"x", "y", "z"});
  auto e = encode_instance(x, build_vocab({x}, 20));
  EXPECT_EQ(e.stop_labels, (std::vector<int>{0, 0, 1}));
}

TEST(Encode, FlatSourceCappedAfterSeparators) {
  std::vector<std::string> posts(40, "a b c d e f g h");
  auto x = instance(posts, std::vector<int>(40, 0), {"a"});
  EncodeLimits lim;
  auto e = encode_instance(x, build_vocab({x}, 20), lim);
  EXPECT_EQ(e.flat_source.size(), 300u);
  EXPECT_EQ(e.flat_source[8], kSep);
  lim.max_posts = 3;
  e = encode_instance(x, build_vocab({x}, 20), lim);
  EXPECT_EQ(e.posts.rows, 3u);
}

TEST(Encode, RejectsEmptyAndOverCap) {
  CorpusInstance empty;
  Vocab v;
  EXPECT_THROW(encode_instance(empty, v), hs::InvalidInput);
  auto x = instance({"a", "b"}, {0, 1}, {"x", "y"});
  EncodeLimits lim;
  lim.max_threads = 1;
  EXPECT_THROW(encode_instance(x, v, lim), hs::InvalidInput);
}

TEST(Decode, StopsAtEosAndRendersUnk) {
  Vocab v({"effect", "of"});
  EXPECT_EQ(decode_ids(std::vector<int>{5, 6, kEos, kPad}, v), "effect of");
  EXPECT_EQ(decode_ids(std::vector<int>{kPad, kPad}, v), "");
  EXPECT_EQ(decode_ids(std::vector<int>{kUnk}, v), "[UNK]");
  EXPECT_THROW(decode_ids(std::vector<int>{9}, v), hs::InvalidInput);
  EXPECT_EQ(split_at_sep(std::vector<int>{5, kSep, 6, kEos, 5}), (std::vector<std::vector<int>>{{5}, {6}}));
}

TEST(EncodeDecode, RoundTripsCanonicalText) {
  hs::Rng rng(4);
  Tokens words = {"alpha", "beta", ".", ",", "gamma", "(", ")", "delta", "'", "x"};
  std::vector<std::string> sums;
  for (int trial = 0; trial < 200; ++trial) {
    Tokens t;
    const auto len = rng.uniform_int(1, 15);
    for (int i = 0; i < len; ++i) t.push_back(words[static_cast<std::size_t>(rng.uniform_int(0, 9))]);
    sums.push_back(join_tokens(t));
  }
  auto x = instance({join_tokens(words)}, {0}, {sums[0]});
  auto v = build_vocab({x}, 100);
  for (const auto& s : sums) {
    auto y = instance({s}, {0}, {s});
    auto e = encode_instance(y, v);
    ASSERT_EQ(decode_ids(e.summaries.row(0), v), s);
    ASSERT_EQ(decode_ids(e.posts.row(0), v), s);
    for (std::size_t j = 0; j < e.posts.cols; ++j) {
      ASSERT_EQ(e.word_mask(0, j), e.posts.at(0, j) != kPad);
    }
  }
}
