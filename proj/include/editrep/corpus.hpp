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

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "editrep/align.hpp"

namespace editrep {

struct EditPair {
  std::string id;
  TokenSequence before;
  TokenSequence after;
  std::optional<TokenSequence> context_before;
  std::optional<TokenSequence> context_after;
  std::optional<std::string> category;

  bool has_context() const {
    return (context_before && !context_before->empty()) || (context_after && !context_after->empty());
  }
  bool operator==(const EditPair&) const = default;
};

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kStart = 2;
  static constexpr std::size_t kEnd = 3;
  static constexpr std::size_t kGap = 4;
  static constexpr std::size_t kSep = 5;  // joins context_before and context_after
  static constexpr std::size_t kReserved = 6;

  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& tokens);  // reserved symbols first

  std::size_t add(const std::string& token);
  bool contains(const std::string& token) const { return index_.contains(token); }
  // UNK for tokens outside the vocabulary.
  std::size_t index(const std::string& token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<std::size_t> encode(const TokenSequence& tokens) const;
  TokenSequence decode(const std::vector<std::size_t>& ids) const;

  static const std::vector<std::string>& reserved();

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Corpus {
  std::vector<EditPair> train;
  std::vector<EditPair> valid;
  std::vector<EditPair> test;
  std::string source;
  std::optional<std::uint64_t> seed;

  std::size_t size() const { return train.size() + valid.size() + test.size(); }
  std::vector<EditPair> all() const;
};

class CorpusError : public std::runtime_error {
 public:
  CorpusError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct LoadOptions {
  std::size_t max_tokens = 100;
  // Keep at most downsample_threshold copies of any one (before, after) edit.
  bool downsample = false;
  std::size_t downsample_threshold = 30;
};

struct LoadReport {
  std::size_t loaded = 0;
  std::size_t skipped_overlength = 0;
  std::size_t dropped_by_downsampling = 0;
  std::vector<std::string> warnings;
};

// One JSON object per line: id, before, after, context_before, context_after,
// category, and an optional split ("train", "valid", "test"). Records without
// a split are assigned 80/10/10 by a hash of their id.
Corpus load_corpus(const std::string& path, const LoadOptions& options = {},
                   LoadReport* report = nullptr);
void save_corpus(const std::string& path, const Corpus& corpus);

std::string pair_to_json(const EditPair& pair, const std::string& split = {});
// Throws std::invalid_argument on a malformed record.
EditPair pair_from_json(const std::string& line, std::string* split = nullptr);

// Renames identifiers to V0, V1, ... by first occurrence over context_before,
// before, after, context_after.
EditPair normalize_variables(const EditPair& pair);

// Counts tokens (including context) over the training split.
Vocabulary build_vocabulary(const Corpus& corpus, std::size_t min_count);

std::vector<EditPair> downsample(const std::vector<EditPair>& pairs, std::size_t threshold,
                                 std::size_t* dropped = nullptr);

// ---- synthetic corpus -------------------------------------------------------

struct SyntheticOptions {
  std::vector<std::string> rules;  // empty means all
  std::size_t n_pairs = 1000;
  std::uint64_t seed = 0;
  std::size_t max_retries = 1000;
};

Corpus generate_synthetic(const SyntheticOptions& options);

}  // namespace editrep
