// Copyright 2026 The editrep Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "editrep/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "editrep/rules.hpp"
#include "editrep/syntax.hpp"
#include "editrep/tensor.hpp"

namespace editrep {

using nlohmann::json;

// ---- vocabulary ---------------------------------------------------------

const std::vector<std::string>& Vocabulary::reserved() {
  static const std::vector<std::string> r = {"<pad>", "<unk>", "<s>", "</s>", "\xE2\x88\x85", "<sep>"};
  return r;
}

Vocabulary::Vocabulary() {
  for (const auto& t : reserved()) add(t);
}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) : Vocabulary() {
  for (const auto& t : tokens) add(t);
}

std::size_t Vocabulary::add(const std::string& token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  tokens_.push_back(token);
  index_.emplace(token, tokens_.size() - 1);
  return tokens_.size() - 1;
}

std::size_t Vocabulary::index(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::size_t> Vocabulary::encode(const TokenSequence& tokens) const {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(index(t));
  return out;
}

TokenSequence Vocabulary::decode(const std::vector<std::size_t>& ids) const {
  TokenSequence out;
  out.reserve(ids.size());
  for (auto i : ids) out.push_back(token(i));
  return out;
}

// ---- corpus I/O -----------------------------------------------------------

std::vector<EditPair> Corpus::all() const {
  std::vector<EditPair> out = train;
  out.insert(out.end(), valid.begin(), valid.end());
  out.insert(out.end(), test.begin(), test.end());
  return out;
}

CorpusError::CorpusError(std::size_t line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

namespace {

TokenSequence token_array(const json& j, const char* field, bool required) {
  if (!j.contains(field) || j.at(field).is_null()) {
    if (required) throw std::invalid_argument(std::string("missing field '") + field + "'");
    return {};
  }
  const auto& a = j.at(field);
  if (!a.is_array()) throw std::invalid_argument(std::string("field '") + field + "' must be an array of strings");
  TokenSequence out;
  for (const auto& t : a) {
    if (!t.is_string()) throw std::invalid_argument(std::string("field '") + field + "' must be an array of strings");
    out.push_back(t.get<std::string>());
  }
  if (required && out.empty()) throw std::invalid_argument(std::string("field '") + field + "' is empty");
  return out;
}

// Deterministic 80/10/10 bucket from an id (FNV-1a).
std::string split_for(const std::string& id) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : id) h = (h ^ c) * 1099511628211ull;
  const auto b = h % 10;
  return b < 8 ? "train" : b == 8 ? "valid" : "test";
}

}  // namespace

EditPair pair_from_json(const std::string& line, std::string* split) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");
  if (!j.contains("id") || !j.at("id").is_string() || j.at("id").get<std::string>().empty())
    throw std::invalid_argument("missing or empty 'id'");
  EditPair p;
  p.id = j.at("id").get<std::string>();
  p.before = token_array(j, "before", true);
  p.after = token_array(j, "after", true);
  if (j.contains("context_before") && !j.at("context_before").is_null())
    p.context_before = token_array(j, "context_before", false);
  if (j.contains("context_after") && !j.at("context_after").is_null())
    p.context_after = token_array(j, "context_after", false);
  if (j.contains("category") && !j.at("category").is_null()) {
    if (!j.at("category").is_string()) throw std::invalid_argument("'category' must be a string");
    p.category = j.at("category").get<std::string>();
  }
  if (split) {
    *split = {};
    if (j.contains("split") && !j.at("split").is_null()) {
      const auto s = j.at("split").get<std::string>();
      if (s != "train" && s != "valid" && s != "test")
        throw std::invalid_argument("'split' must be train, valid or test");
      *split = s;
    }
  }
  return p;
}

std::string pair_to_json(const EditPair& p, const std::string& split) {
  nlohmann::ordered_json j;
  j["id"] = p.id;
  j["before"] = p.before;
  j["after"] = p.after;
  j["context_before"] = p.context_before ? json(*p.context_before) : json(nullptr);
  j["context_after"] = p.context_after ? json(*p.context_after) : json(nullptr);
  j["category"] = p.category ? json(*p.category) : json(nullptr);
  if (!split.empty()) j["split"] = split;
  return j.dump();
}

Corpus load_corpus(const std::string& path, const LoadOptions& options, LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus " + path);
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  Corpus c;
  c.source = path;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string split;
    EditPair p;
    try {
      p = pair_from_json(line, &split);
    } catch (const std::invalid_argument& e) {
      throw CorpusError(lineno, e.what());
    }
    if (!ids.insert(p.id).second) throw CorpusError(lineno, "duplicate id '" + p.id + "'");
    if (p.before.size() > options.max_tokens || p.after.size() > options.max_tokens) {
      ++rep.skipped_overlength;
      rep.warnings.push_back("line " + std::to_string(lineno) + ": pair '" + p.id + "' exceeds " +
                             std::to_string(options.max_tokens) + " tokens, skipped");
      continue;
    }
    if (split.empty()) split = split_for(p.id);
    (split == "train" ? c.train : split == "valid" ? c.valid : c.test).push_back(std::move(p));
  }
  if (options.downsample) {
    for (auto* part : {&c.train, &c.valid, &c.test}) {
      std::size_t dropped = 0;
      *part = downsample(*part, options.downsample_threshold, &dropped);
      rep.dropped_by_downsampling += dropped;
    }
  }
  rep.loaded = c.size();
  return c;
}

void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write corpus " + path);
  for (const auto& p : corpus.train) out << pair_to_json(p, "train") << '\n';
  for (const auto& p : corpus.valid) out << pair_to_json(p, "valid") << '\n';
  for (const auto& p : corpus.test) out << pair_to_json(p, "test") << '\n';
  if (!out) throw std::runtime_error("failed writing corpus " + path);
}

// ---- normalization and vocabulary ------------------------------------------

EditPair normalize_variables(const EditPair& pair) {
  std::map<std::string, std::string> names;
  auto visit = [&](const TokenSequence& seq) {
    for (const auto& t : seq)
      if (is_identifier(t) && !names.contains(t)) names.emplace(t, "V" + std::to_string(names.size()));
  };
  if (pair.context_before) visit(*pair.context_before);
  visit(pair.before);
  visit(pair.after);
  if (pair.context_after) visit(*pair.context_after);
  auto rename = [&](const TokenSequence& seq) {
    TokenSequence out = seq;
    for (auto& t : out)
      if (auto it = names.find(t); it != names.end()) t = it->second;
    return out;
  };
  EditPair out = pair;
  out.before = rename(pair.before);
  out.after = rename(pair.after);
  if (pair.context_before) out.context_before = rename(*pair.context_before);
  if (pair.context_after) out.context_after = rename(*pair.context_after);
  return out;
}

Vocabulary build_vocabulary(const Corpus& corpus, std::size_t min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be at least 1");
  if (corpus.train.empty()) throw std::invalid_argument("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  auto count = [&](const TokenSequence& s) {
    for (const auto& t : s) ++counts[t];
  };
  for (const auto& p : corpus.train) {
    count(p.before);
    count(p.after);
    if (p.context_before) count(*p.context_before);
    if (p.context_after) count(*p.context_after);
  }
  // Most frequent first, ties alphabetical.
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (const auto& [tok, n] : items)
    if (n >= min_count) v.add(tok);
  return v;
}

std::vector<EditPair> downsample(const std::vector<EditPair>& pairs, std::size_t threshold,
                                 std::size_t* dropped) {
  std::map<std::pair<TokenSequence, TokenSequence>, std::size_t> seen;
  std::vector<EditPair> out;
  std::size_t d = 0;
  for (const auto& p : pairs) {
    if (++seen[{p.before, p.after}] > threshold) {
      ++d;
      continue;
    }
    out.push_back(p);
  }
  if (dropped) *dropped = d;
  return out;
}

// ---- synthetic generator ----------------------------------------------------

namespace {

class ProgramSampler {
 public:
  explicit ProgramSampler(Rng& rng) : rng_(rng) {}

  template <typename T>
  const T& pick(const std::vector<T>& v) { return v[rng_.below(v.size())]; }
  bool chance(double p) { return rng_.uniform() < p; }

  std::string ident() { return pick(idents_); }
  std::string member() { return pick(members_); }

  TokenSequence atom() {
    const double r = rng_.uniform();
    if (r < 0.75) return {ident()};
    return {pick(ints_)};
  }

  TokenSequence call(int depth) {
    TokenSequence out{member(), "("};
    const std::size_t n = rng_.below(3);
    for (std::size_t i = 0; i < n; ++i) {
      if (i) out.push_back(",");
      append(out, expr(depth - 1));
    }
    out.push_back(")");
    return out;
  }

  TokenSequence expr(int depth) {
    if (depth <= 0) return atom();
    const double r = rng_.uniform();
    if (r < 0.45) return atom();
    if (r < 0.75) {
      TokenSequence out = expr(depth - 1);
      out.push_back(pick(ops_));
      append(out, expr(depth - 1));
      return out;
    }
    return call(depth);
  }

  TokenSequence statement() {
    TokenSequence out{ident(), "="};
    append(out, expr(2));
    return out;
  }

  // The planted statement, optionally followed by one ordinary statement.
  TokenSequence program(TokenSequence planted) {
    if (chance(0.25)) {
      planted.push_back(";");
      append(planted, statement());
    }
    return planted;
  }

  TokenSequence planted(std::string_view rule) {
    const std::string lhs = ident();
    if (rule == "wrap-call") return program(cat({{lhs, "="}, expr(2)}));
    if (rule == "remove-cast") {
      TokenSequence cast{"(", pick(types_), ")"};
      append(cast, chance(0.3) ? call(1) : atom());
      const double r = rng_.uniform();
      if (r < 0.4) return program(cat({{lhs, "="}, cast}));
      if (r < 0.7) return program(cat({{lhs, "="}, cast, {pick(ops_)}, expr(1)}));
      return program(cat({{lhs, "=", member(), "("}, cast, {")"}}));
    }
    if (rule == "swap-statements") {
      TokenSequence out = statement();
      out.push_back(";");
      append(out, statement());
      if (chance(0.2)) {
        out.push_back(";");
        append(out, statement());
      }
      return out;
    }
    if (rule == "compound-assign") {
      const TokenSequence rhs = chance(0.5) ? atom() : chance(0.5) ? call(1) : cat({atom(), {"*"}, atom()});
      return program(cat({{lhs, "=", lhs, pick(arith_)}, rhs}));
    }
    if (rule == "conditional-access") {
      const TokenSequence access{ident(), ".", member()};
      const double r = rng_.uniform();
      if (r < 0.4) return program(cat({{lhs, "="}, access}));
      if (r < 0.7) return program(cat({{lhs, "="}, access, {pick(ops_)}, expr(1)}));
      return program(cat({{lhs, "=", member(), "("}, access, {")"}}));
    }
    if (rule == "rename-method") {
      TokenSequence c{pick(async_)};
      TokenSequence args = call(1);
      c.insert(c.end(), args.begin() + 1, args.end());
      const double r = rng_.uniform();
      if (r < 0.4) return program(cat({{lhs, "="}, c}));
      if (r < 0.7) return program(c);
      return program(cat({{lhs, "="}, expr(1), {pick(ops_)}, c}));
    }
    if (rule == "add-argument") {
      return chance(0.5) ? program(cat({{lhs, "="}, call(2)})) : program(call(2));
    }
    // inline-lambda
    const std::string v = ident();
    return program(cat({{lhs, "=", pick(outer_), "(", v, "=>", pick(inner_), "(", v, ")", ")"}}));
  }

 private:
  static void append(TokenSequence& out, const TokenSequence& more) { out.insert(out.end(), more.begin(), more.end()); }
  static TokenSequence cat(std::initializer_list<TokenSequence> parts) {
    TokenSequence out;
    for (const auto& p : parts) append(out, p);
    return out;
  }

  Rng& rng_;
  const std::vector<std::string> idents_ = {"x", "y", "z", "i", "n", "count", "total", "value", "item", "result", "data", "size"};
  const std::vector<std::string> members_ = {"Length", "Count", "Max", "Min", "Sum", "Add", "Abs", "Parse", "Format", "First"};
  const std::vector<std::string> ints_ = {"0", "1", "2", "10"};
  const std::vector<std::string> ops_ = {"+", "-", "*", "/", "=="};
  const std::vector<std::string> arith_ = {"+", "-", "*", "/"};
  const std::vector<std::string> types_ = {"int", "long", "float", "string"};
  const std::vector<std::string> async_ = {"Get", "Read", "Write", "Send"};
  const std::vector<std::string> outer_ = {"Select", "Where", "Any", "All"};
  const std::vector<std::string> inner_ = {"Parse", "Abs", "Format", "IsEmpty"};
};

}  // namespace

Corpus generate_synthetic(const SyntheticOptions& options) {
  if (options.n_pairs < 1) throw std::invalid_argument("n_pairs must be at least 1");
  std::vector<std::string> rules = options.rules.empty() ? rule_names() : options.rules;
  for (const auto& r : rules)
    if (!is_rule(r)) throw std::invalid_argument("unknown rule: " + r);
  Rng rng(options.seed);
  ProgramSampler sampler(rng);
  std::map<std::string, std::vector<EditPair>> by_rule;
  for (std::size_t i = 0; i < options.n_pairs; ++i) {
    const std::string& rule = rules[i % rules.size()];
    bool ok = false;
    for (std::size_t attempt = 0; attempt < options.max_retries && !ok; ++attempt) {
      const TokenSequence before = sampler.planted(rule);
      const auto after = apply_rule(rule, before);
      if (!after || *after == before) continue;
      EditPair p;
      char id[32];
      std::snprintf(id, sizeof id, "syn-%06zu", i);
      p.id = id;
      p.before = before;
      p.after = *after;
      p.category = rule;
      by_rule[rule].push_back(normalize_variables(p));
      ok = true;
    }
    if (!ok)
      throw std::runtime_error("rule " + rule + " inapplicable after " + std::to_string(options.max_retries) +
                               " sampled programs");
  }
  // Stratified 80/10/10 split per rule.
  Corpus c;
  c.source = "synthetic";
  c.seed = options.seed;
  for (const auto& rule : rules) {
    auto it = by_rule.find(rule);
    if (it == by_rule.end()) continue;
    auto& pairs = it->second;
    for (std::size_t k = pairs.size(); k > 1; --k) std::swap(pairs[k - 1], pairs[rng.below(k)]);
    const std::size_t n = pairs.size();
    // Rounded so that small categories still reach every split.
    const std::size_t n_valid = (n + 5) / 10, n_test = (n + 5) / 10;
    for (std::size_t k = 0; k < n; ++k) {
      auto& dst = k < n_valid ? c.valid : k < n_valid + n_test ? c.test : c.train;
      dst.push_back(std::move(pairs[k]));
    }
  }
  auto by_id = [](const EditPair& a, const EditPair& b) { return a.id < b.id; };
  std::sort(c.train.begin(), c.train.end(), by_id);
  std::sort(c.valid.begin(), c.valid.end(), by_id);
  std::sort(c.test.begin(), c.test.end(), by_id);
  // Rules were removed from `rules` above only by validation; the generator
  // never produces an empty category for n_pairs >= |rules|.
  return c;
}

}  // namespace editrep
