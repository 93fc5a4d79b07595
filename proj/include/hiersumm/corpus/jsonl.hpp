#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <string>
#include <vector>

#include "hiersumm/corpus/types.hpp"
#include "hiersumm/errors.hpp"

namespace hiersumm::corpus {

namespace detail {

inline std::vector<std::string> string_array(const nlohmann::json& j, const char* key, std::size_t line) {
  if (!j.contains(key)) throw SchemaError(line, std::string("missing key '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_array()) throw SchemaError(line, std::string("'") + key + "' must be an array");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_string()) throw SchemaError(line, std::string("'") + key + "' must hold strings");
    out.push_back(e.template get<std::string>());
  }
  return out;
}

inline nlohmann::json parse_object(const std::string& text, std::size_t line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(line, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError(line, "record must be a JSON object");
  return j;
}

}  // namespace detail

inline nlohmann::json instance_to_json(const CorpusInstance& x) {
  return nlohmann::json{{"posts", x.posts}, {"thread_ids", x.thread_ids}, {"summaries", x.summaries}, {"meta", x.meta}};
}

/// One line, no trailing newline. Non-ASCII text is kept as raw UTF-8.
inline std::string serialize_instance(const CorpusInstance& x) { return instance_to_json(x).dump(); }

/// `line` is 1-based and only used for error messages.
inline CorpusInstance parse_instance(const std::string& text, std::size_t line = 1) {
  const auto j = detail::parse_object(text, line);
  CorpusInstance x;
  x.posts = detail::string_array(j, "posts", line);
  x.summaries = detail::string_array(j, "summaries", line);
  if (!j.contains("thread_ids") || !j.at("thread_ids").is_array()) {
    throw SchemaError(line, "missing or non-array 'thread_ids'");
  }
  for (const auto& e : j.at("thread_ids")) {
    if (!e.is_number_integer()) throw SchemaError(line, "'thread_ids' must hold integers");
    x.thread_ids.push_back(e.template get<int>());
  }
  if (!j.contains("meta")) throw SchemaError(line, "missing key 'meta'");
  x.meta = j.at("meta");
  try {
    x.validate();
  } catch (const InvalidInput& e) {
    throw SchemaError(line, e.what());
  }
  return x;
}

inline std::vector<CorpusInstance> read_instances(std::istream& in) {
  std::vector<CorpusInstance> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    out.push_back(parse_instance(text, line));
  }
  return out;
}

inline std::vector<CorpusInstance> read_instances(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open corpus file '" + path + "'");
  return read_instances(in);
}

inline void write_instances(std::ostream& out, const std::vector<CorpusInstance>& xs) {
  for (const auto& x : xs) out << serialize_instance(x) << '\n';
}

inline void write_instances(const std::string& path, const std::vector<CorpusInstance>& xs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  write_instances(out, xs);
  if (!out) throw InvalidInput("write failed for '" + path + "'");
}

inline SourceDoc parse_doc(const std::string& text, std::size_t line) {
  const auto j = detail::parse_object(text, line);
  SourceDoc d;
  d.sentences = detail::string_array(j, "sentences", line);
  if (!j.contains("title") || !j.at("title").is_string()) throw SchemaError(line, "missing or non-string 'title'");
  d.title = j.at("title").template get<std::string>();
  if (d.sentences.empty()) throw SchemaError(line, "'sentences' is empty");
  if (d.title.empty()) throw SchemaError(line, "'title' is empty");
  return d;
}

struct DocReadReport {
  std::size_t records = 0;
  std::size_t skipped = 0;
  std::vector<std::string> problems;  // first few skip reasons
};

inline constexpr double kMaxSkippedFraction = 0.10;

/// Reads document records, skipping malformed ones. Aborts with InvalidInput
/// when more than 10% of the records are malformed. Doc ids are the 0-based
/// record index among non-empty lines.
inline std::vector<SourceDoc> read_docs(std::istream& in, DocReadReport* report = nullptr) {
  DocReadReport local;
  DocReadReport& r = report ? *report : local;
  r = {};
  std::vector<SourceDoc> docs;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    const auto id = static_cast<std::int64_t>(r.records++);
    try {
      auto d = parse_doc(text, line);
      d.id = id;
      docs.push_back(std::move(d));
    } catch (const SchemaError& e) {
      ++r.skipped;
      if (r.problems.size() < 10) r.problems.push_back(e.what());
    }
  }
  if (r.records == 0) throw InvalidInput("document input is empty");
  if (static_cast<double>(r.skipped) > kMaxSkippedFraction * static_cast<double>(r.records)) {
    throw InvalidInput(std::to_string(r.skipped) + " of " + std::to_string(r.records) +
                       " document records are malformed (limit 10%)" +
                       (r.problems.empty() ? "" : "; first: " + r.problems.front()));
  }
  return docs;
}

inline std::vector<SourceDoc> read_docs(const std::string& path, DocReadReport* report = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open document file '" + path + "'");
  return read_docs(in, report);
}

inline std::string serialize_doc(const SourceDoc& d) {
  return nlohmann::json{{"sentences", d.sentences}, {"title", d.title}}.dump();
}

}  // namespace hiersumm::corpus
