#pragma once

// Runs every subcommand in-process inside a scratch directory and collects
// the artifact bytes, for determinism checks.

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hiersumm_cli.hpp"

namespace pipeline {

struct Call {
  int code = 0;
  std::string out, err;
};

inline Call run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Call c;
  c.code = hiersumm::cli::run_cli(args, out, err);
  c.out = out.str();
  c.err = err.str();
  return c;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::filesystem::path scratch(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("hiersumm_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// toydocs -> synth -> vocab -> train -> generate -> eval -> gradcheck.
/// Returns artifact name -> bytes; "stdout:<cmd>" entries hold primary
/// stdout output. `failures` collects any nonzero exit.
inline std::map<std::string, std::string> run_all(const std::filesystem::path& dir, const std::string& seed,
                                                  std::vector<std::string>* failures = nullptr) {
  const auto p = [&](const char* name) { return (dir / name).string(); };
  std::map<std::string, std::string> art;
  auto step = [&](const std::string& name, const std::vector<std::string>& args) {
    const auto c = run(args);
    if (c.code != 0 && failures) failures->push_back(name + " exited " + std::to_string(c.code) + ": " + c.err);
    if (!c.out.empty()) art["stdout:" + name] = c.out;
  };
  step("toydocs", {"toydocs", "--out", p("docs.jsonl"), "--count", "40", "--seed", seed});
  step("synth", {"synth", "--preset", "medium", "--in", p("docs.jsonl"), "--out", p("corpus"), "--seed", seed,
                 "--ordering", "density"});
  step("vocab", {"vocab", "--corpus", p("corpus/train.jsonl"), "--max-size", "40", "--out", p("vocab.txt")});
  step("train", {"train", "--corpus", p("corpus/train.jsonl"), "--vocab", p("vocab.txt"), "--out", p("model.json"),
                 "--dim", "8", "--batch", "4", "--epochs", "2", "--lr", "0.003", "--seed", seed, "--log-every",
                 "0", "--thread-cap", "3"});
  step("generate", {"generate", "--checkpoint", p("model.json"), "--input", p("corpus/test.jsonl"), "--out",
                    p("gen.jsonl"), "--trace", p("trace.jsonl")});
  step("eval", {"eval", "--gen", p("gen.jsonl"), "--ref", p("corpus/test.jsonl"), "--out", p("report.json"),
                "--per-instance", p("per_instance.jsonl")});
  step("gradcheck", {"gradcheck", "--variant", "hier2seq", "--dim", "3", "--seed", seed});
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) art[std::filesystem::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return art;
}

}  // namespace pipeline
