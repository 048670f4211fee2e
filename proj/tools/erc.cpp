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

// erc: command-line entry point for the edit representation toolkit.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "editrep/align.hpp"
#include "editrep/corpus.hpp"
#include "editrep/eval.hpp"
#include "editrep/model.hpp"
#include "editrep/parallel.hpp"
#include "editrep/rules.hpp"
#include "editrep/syntax.hpp"
#include "editrep/train.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;
using namespace editrep;

constexpr const char* kVersion = "0.1.0";

// Bad input files, configurations or data; exit status 3.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::uint64_t seed = 0;
  bool deterministic = false;
  std::string out = "-";
  std::string manifest;
  std::size_t threads = 0;

  std::size_t workers() const { return deterministic ? 1 : resolve_threads(threads); }
};

void add_common(CLI::App* sub, Common& c, bool has_out = true) {
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_flag("--deterministic", c.deterministic,
                "Single-threaded, no wall-clock fields; repeated runs are bit-identical");
  if (has_out) sub->add_option("--out", c.out, "Output path ('-' for stdout)")->capture_default_str();
  sub->add_option("--manifest", c.manifest,
                  "Run manifest path (default: <out>.manifest.json, or erc-<command>.manifest.json "
                  "when writing to stdout)");
  sub->add_option("--threads", c.threads, "Worker threads (default: all cores; ERC_THREADS caps the count)");
}

class Output {
 public:
  explicit Output(const std::string& path) : path_(path) {
    if (path_ != "-") {
      file_.open(path_, std::ios::trunc | std::ios::binary);
      if (!file_) throw InputError("cannot write " + path_);
    }
  }
  std::ostream& os() { return path_ == "-" ? std::cout : file_; }

 private:
  std::string path_;
  std::ofstream file_;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TokenSequence tokens_from(const std::string& text, const std::string& file, const char* what) {
  if (!file.empty()) return split_tokens(read_text(file));
  if (text.empty()) throw InputError(std::string("no ") + what + " given");
  return split_tokens(text);
}

Corpus load_input_corpus(const std::string& path, const LoadOptions& lo = {}) {
  if (!std::filesystem::exists(path)) throw InputError("corpus " + path + " does not exist");
  try {
    return load_corpus(path, lo);
  } catch (const CorpusError& e) {
    throw InputError(path + ": " + e.what());
  }
}

std::vector<EditPair> select_split(const Corpus& c, const std::string& split) {
  if (split == "train") return c.train;
  if (split == "valid") return c.valid;
  if (split == "test") return c.test;
  if (split == "all") return c.all();
  throw InputError("unknown split '" + split + "' (expected train, valid, test or all)");
}

std::unique_ptr<EditModel> load_model(const std::string& path) {
  if (!std::filesystem::exists(path)) throw InputError("model " + path + " does not exist");
  try {
    return EditModel::load(path);
  } catch (const std::exception& e) {
    throw InputError("cannot load model " + path + ": " + e.what());
  }
}

struct Representations {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> vectors;
};

Representations load_reps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open representations " + path);
  Representations r;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      r.ids.push_back(j.at("id").get<std::string>());
      r.vectors.push_back(j.at("vector").get<std::vector<double>>());
    } catch (const json::exception& e) {
      throw InputError(path + ": line " + std::to_string(n) + ": " + e.what());
    }
  }
  if (r.ids.empty()) throw InputError(path + " holds no representations");
  return r;
}

std::vector<double> load_edit_vector(const std::string& path) {
  const std::string text = read_text(path);
  try {
    std::istringstream ss(text);
    std::string first;
    std::getline(ss, first);
    json j = json::parse(text.find('\n') != std::string::npos && text.find('\n') + 1 < text.size()
                             ? first
                             : text);
    if (j.is_object()) j = j.at("vector");
    return j.get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw InputError("edit vector " + path + ": " + e.what());
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- run manifest ---------------------------------------------------------

struct Manifest {
  std::string command;
  ordered_json config = ordered_json::object();
  ordered_json inputs = ordered_json::object();
  ordered_json outputs = ordered_json::object();
};

void write_manifest(const Manifest& m, const Common& c, double seconds, std::time_t started) {
  std::string path = c.manifest;
  if (path.empty()) path = c.out != "-" ? c.out + ".manifest.json" : "erc-" + m.command + ".manifest.json";
  ordered_json j;
  j["subcommand"] = m.command;
  j["version"] = kVersion;
  j["seed"] = c.seed;
  j["deterministic"] = c.deterministic;
  j["threads"] = c.workers();
  j["config"] = m.config;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  if (c.deterministic) {
    j["started_at"] = nullptr;
    j["wall_clock_seconds"] = nullptr;
  } else {
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&started));
    j["started_at"] = buf;
    j["wall_clock_seconds"] = seconds;
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot write manifest " + path);
  os << j.dump(2) << '\n';
}

// ---- subcommands ------------------------------------------------------------

struct GenArgs {
  std::string rules = "all";
  std::size_t n = 1000;
  std::size_t max_retries = 1000;
};

void run_gen(const GenArgs& a, const Common& c, Manifest& m) {
  SyntheticOptions o;
  if (a.rules != "all") {
    std::stringstream ss(a.rules);
    for (std::string r; std::getline(ss, r, ',');) {
      if (!is_rule(r)) throw InputError("unknown rule '" + r + "'");
      o.rules.push_back(r);
    }
  }
  o.n_pairs = a.n;
  o.seed = c.seed;
  o.max_retries = a.max_retries;
  if (o.n_pairs < 1) throw InputError("--n must be at least 1");
  const Corpus corpus = generate_synthetic(o);
  if (c.out == "-") {
    for (const auto& p : corpus.train) std::cout << pair_to_json(p, "train") << '\n';
    for (const auto& p : corpus.valid) std::cout << pair_to_json(p, "valid") << '\n';
    for (const auto& p : corpus.test) std::cout << pair_to_json(p, "test") << '\n';
  } else {
    save_corpus(c.out, corpus);
  }
  m.config["rules"] = o.rules.empty() ? json(rule_names()) : json(o.rules);
  m.config["n"] = a.n;
  m.config["max_retries"] = a.max_retries;
  m.outputs["corpus"] = c.out;
  std::cerr << "wrote " << corpus.size() << " pairs (train " << corpus.train.size() << ", valid "
            << corpus.valid.size() << ", test " << corpus.test.size() << ")\n";
}

struct PairArgs {
  std::string before, after, before_file, after_file;
};

void add_pair_options(CLI::App* sub, PairArgs& a) {
  sub->add_option("--before", a.before, "Original program, whitespace-tokenized");
  sub->add_option("--after", a.after, "Edited program, whitespace-tokenized");
  sub->add_option("--before-file", a.before_file, "File holding the original program");
  sub->add_option("--after-file", a.after_file, "File holding the edited program");
}

void run_diff(const PairArgs& a, const Common& c, Manifest& m) {
  const auto before = tokens_from(a.before, a.before_file, "--before");
  const auto after = tokens_from(a.after, a.after_file, "--after");
  Output out(c.out);
  out.os() << format_diff(align(before, after));
  m.inputs["before"] = join_tokens(before);
  m.inputs["after"] = join_tokens(after);
  m.outputs["diff"] = c.out;
}

struct ParseArgs {
  std::string input, input_file, source;
  bool actions = false;
  bool no_treecp = false;
};

SyntaxTree parse_or_throw(const TokenSequence& toks) {
  try {
    return parse(toks);
  } catch (const SyntaxError& e) {
    throw InputError(std::string("syntax error: ") + e.what());
  }
}

void run_parse(const ParseArgs& a, const Common& c, Manifest& m) {
  const auto toks = tokens_from(a.input, a.input_file, "--input");
  const SyntaxTree t = parse_or_throw(toks);
  Output out(c.out);
  out.os() << t.bracketed() << '\n';
  if (a.actions) {
    std::optional<SyntaxTree> src;
    if (!a.source.empty()) src = parse_or_throw(split_tokens(a.source));
    LinearizeOptions lo;
    lo.enable_treecp = !a.no_treecp;
    const auto acts = tree_to_actions(t, src ? &*src : nullptr, lo);
    for (std::size_t i = 0; i < acts.size(); ++i)
      out.os() << i + 1 << '\t' << describe(acts[i], src ? &*src : nullptr) << '\n';
  }
  m.inputs["program"] = join_tokens(toks);
  m.config["actions"] = a.actions;
  m.config["treecp"] = !a.no_treecp;
  m.outputs["tree"] = c.out;
}

void run_graph(const PairArgs& a, const Common& c, Manifest& m) {
  const auto before = tokens_from(a.before, a.before_file, "--before");
  Output out(c.out);
  if (a.after.empty() && a.after_file.empty()) {
    out.os() << build_graph(parse_or_throw(before)).to_text();
  } else {
    const auto after = tokens_from(a.after, a.after_file, "--after");
    out.os() << build_change_graph(parse_or_throw(before), parse_or_throw(after)).to_text();
    m.inputs["after"] = join_tokens(after);
  }
  m.inputs["before"] = join_tokens(before);
  m.outputs["graph"] = c.out;
}

struct TrainArgs {
  std::string corpus, config, editor, edit_encoder, dims = "full";
  std::size_t epochs = 0, batch_size = 0, patience = 0, min_count = 0;
  std::size_t edit_dim = 0, embed_dim = 0, encoder_hidden = 0, decoder_hidden = 0;
  std::size_t ggnn_layers = 0, ggnn_steps = 0, beam = 0;
  double lr = 0.0, clip = 0.0, time_budget = 0.0;
  bool no_treecp = false, share_ggnn = false, no_input_feeding = false;
};

void run_train(const TrainArgs& a, const Common& c, Manifest& m) {
  if (c.out == "-") throw InputError("train needs --out <model.erck>");
  TrainConfig tc;
  if (!a.config.empty()) {
    try {
      tc = train_config_from_json(json::parse(read_text(a.config)));
    } catch (const std::exception& e) {
      throw InputError("config " + a.config + ": " + e.what());
    }
  } else if (a.dims == "desk") {
    tc.model = ModelConfig::desk();
  } else if (a.dims != "full") {
    throw InputError("--dims must be full or desk");
  }
  try {
    if (!a.editor.empty()) tc.model.editor = parse_editor_kind(a.editor);
    if (!a.edit_encoder.empty()) tc.model.edit_encoder = parse_edit_encoder_kind(a.edit_encoder);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  auto set = [](std::size_t v, std::size_t& dst) {
    if (v) dst = v;
  };
  set(a.epochs, tc.max_epochs);
  set(a.batch_size, tc.batch_size);
  set(a.patience, tc.patience);
  set(a.min_count, tc.min_count);
  set(a.edit_dim, tc.model.edit_dim);
  set(a.embed_dim, tc.model.embed_dim);
  set(a.encoder_hidden, tc.model.encoder_hidden);
  set(a.decoder_hidden, tc.model.decoder_hidden);
  set(a.ggnn_layers, tc.model.ggnn_layers);
  set(a.ggnn_steps, tc.model.ggnn_steps_per_layer);
  set(a.beam, tc.model.beam_size);
  if (a.lr > 0.0) tc.learning_rate = a.lr;
  if (a.clip > 0.0) tc.clip_norm = a.clip;
  if (a.no_treecp) tc.model.tree_copy = false;
  if (a.share_ggnn) tc.model.share_ggnn = true;
  if (a.no_input_feeding) tc.model.input_feeding = false;
  if (a.time_budget > 0.0) {
    if (c.deterministic) throw InputError("--time-budget depends on wall-clock and conflicts with --deterministic");
    tc.time_budget_seconds = a.time_budget;
  }
  tc.seed = c.seed;
  tc.threads = c.workers();
  try {
    tc.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("invalid configuration: ") + e.what());
  }
  const Corpus corpus = load_input_corpus(a.corpus);
  TrainResult r;
  try {
    r = train(corpus, tc, [](const EpochRecord& e) {
      std::cerr << "epoch " << e.epoch << " train_loss " << (e.epoch ? fmt(e.train_loss) : "-")
                << " dev_ppl " << fmt(e.dev_perplexity) << '\n';
    });
  } catch (const IncompatibleCorpus& e) {
    throw InputError(std::string("invalid configuration for this corpus: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  r.model->save(c.out, r.metadata(tc));
  if (r.diverged) std::cerr << "warning: " << r.diagnostic << '\n';
  std::cerr << "best epoch " << r.best_epoch << " dev_ppl " << fmt(r.best_dev_perplexity) << '\n';
  m.config = to_json(tc);
  m.inputs["corpus"] = a.corpus;
  if (!a.config.empty()) m.inputs["config"] = a.config;
  m.outputs["checkpoint"] = c.out;
  m.outputs["sidecar"] = c.out + ".json";
  m.outputs["best_epoch"] = r.best_epoch;
  m.outputs["dev_perplexity"] = r.best_dev_perplexity;
}

struct ModelCorpusArgs {
  std::string model, corpus, split = "test";
};

void run_encode(const ModelCorpusArgs& a, const Common& c, Manifest& m) {
  const auto model = load_model(a.model);
  const auto pairs = select_split(load_input_corpus(a.corpus), a.split);
  std::vector<std::vector<double>> reps(pairs.size());
  std::vector<std::string> errors(pairs.size());
  parallel_for(pairs.size(), c.workers(), [&](std::size_t i) {
    if (!model->accepts(pairs[i])) {
      errors[i] = "pair '" + pairs[i].id + "' does not parse";
      return;
    }
    reps[i] = model->edit_vector(pairs[i]);
  });
  for (const auto& e : errors)
    if (!e.empty()) throw InputError(e + "; the " + std::string(to_string(model->config().edit_encoder)) +
                                     " edit encoder needs parseable programs");
  Output out(c.out);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ordered_json j;
    j["id"] = pairs[i].id;
    if (pairs[i].category) j["category"] = *pairs[i].category;
    j["vector"] = reps[i];
    out.os() << j.dump() << '\n';
  }
  m.inputs["model"] = a.model;
  m.inputs["corpus"] = a.corpus;
  m.config["split"] = a.split;
  m.outputs["representations"] = c.out;
}

struct EditArgs {
  std::string model, input, input_text, edit_vector, context_before, context_after, editor;
  std::size_t beam = 5;
  bool emit_tree = false;
};

void run_edit(const EditArgs& a, const Common& c, Manifest& m) {
  const auto model = load_model(a.model);
  if (!a.editor.empty() && a.editor != to_string(model->config().editor))
    throw InputError("--editor " + a.editor + " does not match the model's " +
                     std::string(to_string(model->config().editor)) + " editor");
  EditPair p;
  p.id = "input";
  p.before = tokens_from(a.input_text, a.input, "--input");
  p.after = p.before;
  if (!a.context_before.empty()) p.context_before = split_tokens(read_text(a.context_before));
  if (!a.context_after.empty()) p.context_after = split_tokens(read_text(a.context_after));
  const auto rep = load_edit_vector(a.edit_vector);
  if (rep.size() != model->config().edit_dim)
    throw InputError("edit vector has " + std::to_string(rep.size()) + " entries, model expects " +
                     std::to_string(model->config().edit_dim));
  if (model->config().editor == EditorKind::Tree) parse_or_throw(p.before);
  const auto cands = model->decode(p, rep, a.beam);
  Output out(c.out);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    ordered_json j;
    j["rank"] = i + 1;
    j["tokens"] = cands[i].tokens;
    j["text"] = join_tokens(cands[i].tokens);
    j["score"] = cands[i].score;
    j["finished"] = cands[i].finished;
    if (a.emit_tree && cands[i].tree) j["tree"] = cands[i].tree->bracketed();
    out.os() << j.dump() << '\n';
  }
  m.inputs["model"] = a.model;
  m.inputs["input"] = a.input.empty() ? json(join_tokens(p.before)) : json(a.input);
  m.inputs["edit_vector"] = a.edit_vector;
  m.config["beam"] = a.beam;
  m.outputs["candidates"] = c.out;
}

struct NeighborArgs {
  std::string reps, queries;
  std::size_t k = 5, n_queries = 0;
};

void run_neighbors(const NeighborArgs& a, const Common& c, Manifest& m) {
  const auto reps = load_reps(a.reps);
  RepresentationIndex index;
  for (std::size_t i = 0; i < reps.ids.size(); ++i) index.add(reps.ids[i], reps.vectors[i]);
  std::vector<std::size_t> queries;
  if (!a.queries.empty()) {
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < reps.ids.size(); ++i) pos[reps.ids[i]] = i;
    for (const auto& id : split_tokens(read_text(a.queries))) {
      auto it = pos.find(id);
      if (it == pos.end()) throw InputError("query id '" + id + "' not in " + a.reps);
      queries.push_back(it->second);
    }
  } else {
    queries.resize(reps.ids.size());
    for (std::size_t i = 0; i < queries.size(); ++i) queries[i] = i;
    if (a.n_queries && a.n_queries < queries.size()) {
      Rng rng(c.seed);
      for (std::size_t i = queries.size(); i > 1; --i) std::swap(queries[i - 1], queries[rng.below(i)]);
      queries.resize(a.n_queries);
      std::sort(queries.begin(), queries.end());
    }
  }
  Output out(c.out);
  out.os() << "query_id,rank,neighbor_id,similarity\n";
  std::size_t flagged = 0;
  for (auto q : queries) {
    const auto r = nearest_neighbors(reps.ids[q], reps.vectors[q], index, a.k);
    flagged += r.zero_norm;
    for (std::size_t i = 0; i < r.neighbors.size(); ++i)
      out.os() << r.query_id << ',' << i + 1 << ',' << r.neighbors[i].id << ',' << fmt(r.neighbors[i].similarity)
               << '\n';
  }
  if (flagged) std::cerr << "warning: " << flagged << " queries involved zero-norm vectors (similarity 0)\n";
  m.inputs["representations"] = a.reps;
  m.config["k"] = a.k;
  m.config["queries"] = queries.size();
  m.outputs["neighbors"] = c.out;
}

struct EvalArgs {
  ModelCorpusArgs mc;
  std::string rep = "gold", ratings;
  std::size_t k = 5;
};

void run_eval(const EvalArgs& a, const Common& c, Manifest& m) {
  Output out(c.out);
  out.os() << "metric,value\n";
  if (!a.mc.model.empty()) {
    const auto model = load_model(a.mc.model);
    if (a.mc.corpus.empty()) throw InputError("eval with --model needs --corpus");
    const auto pairs = select_split(load_input_corpus(a.mc.corpus), a.mc.split);
    for (const auto& p : pairs)
      if (!model->accepts(p)) throw InputError("pair '" + p.id + "' does not parse");
    if (a.rep != "gold" && a.rep != "zero") throw InputError("--rep must be gold or zero");
    if (a.k > std::max(model->config().beam_size, a.k)) throw InputError("k exceeds the beam size");
    const auto ppl = perplexity(*model, pairs, c.workers());
    const auto acc = editor_accuracy(*model, pairs, a.rep == "gold" ? RepSource::Gold : RepSource::Zero, a.k,
                                     c.workers());
    out.os() << "pairs," << pairs.size() << '\n';
    out.os() << "perplexity," << fmt(ppl.perplexity) << '\n';
    out.os() << "perplexity_unit," << (model->config().editor == EditorKind::Seq ? "token" : "action") << '\n';
    out.os() << "unk_targets," << ppl.unk << '\n';
    out.os() << "acc_at_1," << fmt(acc.acc_at_1) << '\n';
    out.os() << "recall_at_" << a.k << ',' << fmt(acc.recall_at_k) << '\n';
    // Published GitHubEdits figures for Seq2Seq with the sequence edit encoder;
    // context only, not reproducible at this scale.
    out.os() << "reference_githubedits_acc_at_1,59.63\n";
    out.os() << "reference_githubedits_recall_at_5,65.46\n";
    out.os() << "reference_githubedits_ppl,1.2792\n";
    m.inputs["model"] = a.mc.model;
    m.inputs["corpus"] = a.mc.corpus;
    m.config["split"] = a.mc.split;
    m.config["rep"] = a.rep;
  }
  if (!a.ratings.empty()) {
    std::map<std::string, std::vector<int>> ratings;
    try {
      ratings = load_ratings_csv(a.ratings);
    } catch (const CorpusError& e) {
      throw InputError(a.ratings + ": " + e.what());
    }
    double dsum = 0.0, nsum = 0.0;
    std::size_t n = 0, zero = 0;
    for (const auto& [q, r] : ratings) {
      const std::size_t k = std::min(a.k, r.size());
      dsum += dcg(r, k);
      const auto nd = ndcg(r, k);
      nsum += nd.value;
      zero += nd.all_zero;
      ++n;
    }
    out.os() << "rated_queries," << n << '\n';
    out.os() << "mean_dcg_at_" << a.k << ',' << fmt(n ? dsum / static_cast<double>(n) : 0.0) << '\n';
    out.os() << "mean_ndcg_at_" << a.k << ',' << fmt(n ? nsum / static_cast<double>(n) : 0.0) << '\n';
    out.os() << "all_zero_queries," << zero << '\n';
    out.os() << "reference_neural_dcg_at_5,13.5\n";
    out.os() << "reference_neural_ndcg_at_5,0.903\n";
    m.inputs["ratings"] = a.ratings;
  }
  if (a.mc.model.empty() && a.ratings.empty()) throw InputError("eval needs --model/--corpus or --ratings");
  m.config["k"] = a.k;
  m.outputs["table"] = c.out;
}

struct TransferArgs {
  ModelCorpusArgs mc;
  std::size_t seeds = 10, k = 5;
};

void run_transfer(const TransferArgs& a, const Common& c, Manifest& m) {
  const auto model = load_model(a.mc.model);
  const auto pairs = select_split(load_input_corpus(a.mc.corpus), a.mc.split);
  for (const auto& p : pairs) {
    if (!p.category) throw InputError("pair '" + p.id + "' has no category");
    if (!model->accepts(p)) throw InputError("pair '" + p.id + "' does not parse");
  }
  const auto rows = transfer_eval(*model, pairs, a.seeds, c.seed, a.k, c.workers());
  Output out(c.out);
  out.os() << "category,size,seeds,best_acc_at_1,best_recall_at_" << a.k << ",best_seed\n";
  for (const auto& r : rows) {
    out.os() << r.category << ',' << r.size << ',' << r.seed_ids.size() << ',' << fmt(r.best_acc) << ','
             << fmt(r.best_recall) << ',' << r.best_seed << '\n';
    if (r.warning) std::cerr << "warning: " << r.category << ": " << *r.warning << '\n';
  }
  m.inputs["model"] = a.mc.model;
  m.inputs["corpus"] = a.mc.corpus;
  m.config["split"] = a.mc.split;
  m.config["seeds_per_category"] = a.seeds;
  m.config["k"] = a.k;
  m.outputs["table"] = c.out;
}

struct ClusterArgs {
  std::string reps, centroids;
  std::size_t k = 8, max_iterations = 200;
};

void run_cluster(const ClusterArgs& a, const Common& c, Manifest& m) {
  const auto reps = load_reps(a.reps);
  if (a.k < 1 || a.k > reps.ids.size())
    throw InputError("--k " + std::to_string(a.k) + " must be between 1 and " + std::to_string(reps.ids.size()));
  const auto r = kmeans(reps.vectors, a.k, c.seed, a.max_iterations);
  Output out(c.out);
  out.os() << "id,cluster\n";
  for (std::size_t i = 0; i < reps.ids.size(); ++i) out.os() << reps.ids[i] << ',' << r.assignment[i] << '\n';
  if (!a.centroids.empty()) {
    std::ofstream cs(a.centroids, std::ios::trunc);
    if (!cs) throw InputError("cannot write " + a.centroids);
    for (std::size_t k = 0; k < r.centroids.size(); ++k) {
      ordered_json j;
      j["cluster"] = k;
      j["vector"] = r.centroids[k];
      cs << j.dump() << '\n';
    }
    m.outputs["centroids"] = a.centroids;
  }
  // Purity against categories when the representation file carries them.
  std::ifstream in(a.reps);
  std::vector<std::string> labels;
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line);
    if (!j.contains("category")) {
      labels.clear();
      break;
    }
    labels.push_back(j.at("category").get<std::string>());
  }
  if (labels.size() == reps.ids.size()) {
    const double purity = cluster_purity(r.assignment, labels);
    std::cerr << "purity " << fmt(purity) << '\n';
    m.outputs["purity"] = purity;
  }
  std::cerr << "iterations " << r.iterations << " inertia " << fmt(r.inertia.empty() ? 0.0 : r.inertia.back()) << '\n';
  m.inputs["representations"] = a.reps;
  m.config["k"] = a.k;
  m.config["max_iterations"] = a.max_iterations;
  m.outputs["assignments"] = c.out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"erc: learned edit representations over token and tree edits"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  Manifest manifest;
  std::function<void()> action;

  GenArgs gen;
  auto* s_gen = app.add_subcommand("gen-synthetic", "Generate a synthetic edit corpus (JSONL)");
  add_common(s_gen, common);
  s_gen->add_option("--rules", gen.rules, "Comma-separated rule ids, or 'all'")->capture_default_str();
  s_gen->add_option("--n", gen.n, "Number of pairs")->capture_default_str();
  s_gen->add_option("--max-retries", gen.max_retries, "Resampling bound per pair")->capture_default_str();
  s_gen->callback([&] { action = [&] { run_gen(gen, common, manifest); }; });

  PairArgs diff;
  auto* s_diff = app.add_subcommand("diff", "Align two token sequences; print tag, before, after columns");
  add_common(s_diff, common);
  add_pair_options(s_diff, diff);
  s_diff->callback([&] { action = [&] { run_diff(diff, common, manifest); }; });

  ParseArgs pa;
  auto* s_parse = app.add_subcommand("parse", "Parse a toy program; optionally print its decoder actions");
  add_common(s_parse, common);
  s_parse->add_option("--input", pa.input, "Program text, whitespace-tokenized");
  s_parse->add_option("--input-file", pa.input_file, "File holding the program");
  s_parse->add_flag("--actions", pa.actions, "Also print the action sequence");
  s_parse->add_option("--source", pa.source, "Source program for TreeCp actions");
  s_parse->add_flag("--no-treecp", pa.no_treecp, "Linearize without TreeCp");
  s_parse->callback([&] { action = [&] { run_parse(pa, common, manifest); }; });

  PairArgs graph;
  auto* s_graph = app.add_subcommand("graph", "Print a program graph, or a change graph when --after is given");
  add_common(s_graph, common);
  add_pair_options(s_graph, graph);
  s_graph->callback([&] { action = [&] { run_graph(graph, common, manifest); }; });

  TrainArgs tr;
  auto* s_train = app.add_subcommand("train", "Train an edit encoder and neural editor");
  add_common(s_train, common);
  s_train->add_option("--corpus", tr.corpus, "Training corpus (JSONL)")->required();
  s_train->add_option("--config", tr.config, "Train config JSON; flags override it");
  s_train->add_option("--editor", tr.editor, "seq or tree");
  s_train->add_option("--edit-encoder", tr.edit_encoder, "seq, graph or bag");
  s_train->add_option("--dims", tr.dims, "Dimension preset: full or desk")->capture_default_str();
  s_train->add_option("--epochs", tr.epochs, "Maximum epochs");
  s_train->add_option("--batch-size", tr.batch_size, "Minibatch size");
  s_train->add_option("--patience", tr.patience, "Epochs without dev improvement before stopping");
  s_train->add_option("--lr", tr.lr, "Adam learning rate");
  s_train->add_option("--clip", tr.clip, "Global gradient-norm clip");
  s_train->add_option("--min-count", tr.min_count, "Vocabulary frequency threshold");
  s_train->add_option("--edit-dim", tr.edit_dim, "Edit representation size");
  s_train->add_option("--embed-dim", tr.embed_dim, "Token embedding size");
  s_train->add_option("--encoder-hidden", tr.encoder_hidden, "Encoder hidden size per direction");
  s_train->add_option("--decoder-hidden", tr.decoder_hidden, "Decoder hidden size");
  s_train->add_option("--ggnn-layers", tr.ggnn_layers, "GGNN layers");
  s_train->add_option("--ggnn-steps", tr.ggnn_steps, "GGNN propagation steps per layer");
  s_train->add_option("--beam", tr.beam, "Beam size stored with the model");
  s_train->add_option("--time-budget", tr.time_budget, "Stop after the epoch that crosses this many seconds");
  s_train->add_flag("--no-treecp", tr.no_treecp, "Disable TreeCp actions");
  s_train->add_flag("--share-ggnn", tr.share_ggnn, "Graph edit encoder shares the tree editor's GGNN");
  s_train->add_flag("--no-input-feeding", tr.no_input_feeding, "Do not feed attention context back");
  s_train->callback([&] { action = [&] { run_train(tr, common, manifest); }; });

  ModelCorpusArgs enc;
  auto* s_enc = app.add_subcommand("encode", "Emit edit representations as JSONL");
  add_common(s_enc, common);
  s_enc->add_option("--model", enc.model, "Checkpoint (.erck)")->required();
  s_enc->add_option("--corpus", enc.corpus, "Corpus (JSONL)")->required();
  s_enc->add_option("--split", enc.split, "train, valid, test or all")->capture_default_str();
  s_enc->callback([&] { action = [&] { run_encode(enc, common, manifest); }; });

  EditArgs ed;
  auto* s_edit = app.add_subcommand("edit", "Apply an edit representation to a program");
  add_common(s_edit, common);
  s_edit->add_option("--model", ed.model, "Checkpoint (.erck)")->required();
  s_edit->add_option("--input", ed.input, "File holding the program to edit");
  s_edit->add_option("--input-text", ed.input_text, "Program to edit, whitespace-tokenized");
  s_edit->add_option("--edit-vector", ed.edit_vector, "JSON array, or an object with a 'vector' field")->required();
  s_edit->add_option("--context-before", ed.context_before, "File with preceding context tokens");
  s_edit->add_option("--context-after", ed.context_after, "File with following context tokens");
  s_edit->add_option("--beam", ed.beam, "Beam size")->capture_default_str();
  s_edit->add_option("--editor", ed.editor, "Expected editor kind (seq or tree)");
  s_edit->add_flag("--emit-tree", ed.emit_tree, "Include bracketed trees (tree editor)");
  s_edit->callback([&] { action = [&] { run_edit(ed, common, manifest); }; });

  NeighborArgs nb;
  auto* s_nb = app.add_subcommand("neighbors", "Nearest neighbors of edit representations (CSV)");
  add_common(s_nb, common);
  s_nb->add_option("--reps", nb.reps, "Representations from 'encode'")->required();
  s_nb->add_option("--k", nb.k, "Neighbors per query")->capture_default_str();
  s_nb->add_option("--queries", nb.queries, "File of query ids (default: all, or a sample)");
  s_nb->add_option("--n-queries", nb.n_queries, "Sample this many queries with --seed");
  s_nb->callback([&] { action = [&] { run_neighbors(nb, common, manifest); }; });

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("eval", "Perplexity, Acc@1 and Recall@k; DCG/NDCG from a ratings CSV");
  add_common(s_eval, common);
  s_eval->add_option("--model", ev.mc.model, "Checkpoint (.erck)");
  s_eval->add_option("--corpus", ev.mc.corpus, "Corpus (JSONL)");
  s_eval->add_option("--split", ev.mc.split, "train, valid, test or all")->capture_default_str();
  s_eval->add_option("--rep", ev.rep, "Edit representation: gold or zero")->capture_default_str();
  s_eval->add_option("--k", ev.k, "Cutoff for Recall@k and DCG@k")->capture_default_str();
  s_eval->add_option("--ratings", ev.ratings, "CSV query_id,neighbor_id,rating");
  s_eval->callback([&] { action = [&] { run_eval(ev, common, manifest); }; });

  TransferArgs tf;
  auto* s_tf = app.add_subcommand("transfer", "One-shot transfer: best seed representation per category");
  add_common(s_tf, common);
  s_tf->add_option("--model", tf.mc.model, "Checkpoint (.erck)")->required();
  s_tf->add_option("--corpus", tf.mc.corpus, "Labeled corpus (JSONL)")->required();
  s_tf->add_option("--split", tf.mc.split, "train, valid, test or all")->capture_default_str();
  s_tf->add_option("--seeds", tf.seeds, "Seed pairs per category")->capture_default_str();
  s_tf->add_option("--k", tf.k, "Cutoff for Recall@k")->capture_default_str();
  s_tf->callback([&] { action = [&] { run_transfer(tf, common, manifest); }; });

  ClusterArgs cl;
  auto* s_cl = app.add_subcommand("cluster", "k-means over edit representations");
  add_common(s_cl, common);
  s_cl->add_option("--reps", cl.reps, "Representations from 'encode'")->required();
  s_cl->add_option("--k", cl.k, "Number of clusters")->capture_default_str();
  s_cl->add_option("--max-iterations", cl.max_iterations, "Lloyd iteration cap")->capture_default_str();
  s_cl->add_option("--centroids", cl.centroids, "Write centroid vectors (JSONL) here");
  s_cl->callback([&] { action = [&] { run_cluster(cl, common, manifest); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }
  manifest.command = app.get_subcommands().front()->get_name();
  const auto started = std::time(nullptr);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    action();
    write_manifest(manifest, common, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
                   started);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
