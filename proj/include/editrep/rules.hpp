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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "editrep/syntax.hpp"

namespace editrep {

// Built-in rewrite rules over toy programs. Each rewrites the first matching
// site in preorder and returns nothing when the program has no such site.
//
//   wrap-call           first assignment's right side E  ->  Wrap ( E )
//   remove-cast         first cast ( T ) E               ->  E
//   swap-statements     first two statements of a block are exchanged
//   compound-assign     x = x op E                       ->  x op= E
//   conditional-access  first E . M                      ->  E ?. M
//   rename-method       Get/Read/Write/Send ( ... )      ->  GetAsync/... ( ... )
//   add-argument        first call M ( args )            ->  M ( args , 0 )
//   inline-lambda       M ( v => N ( v ) )               ->  M ( N )
const std::vector<std::string>& rule_names();
bool is_rule(std::string_view name);

std::optional<SyntaxTree> apply_rule(std::string_view rule, const SyntaxTree& tree);
std::optional<TokenSequence> apply_rule(std::string_view rule, const TokenSequence& tokens);

}  // namespace editrep
