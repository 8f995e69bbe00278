// Copyright 2026 The qspace Authors
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

#include <string_view>

#include "qspace/query_ir.hpp"
#include "qspace/schema.hpp"

namespace qspace {

/// Parses one statement of the supported dialect: a single SELECT block with
/// comma joins or INNER JOIN ... ON equi-joins, a conjunctive WHERE clause,
/// and optional GROUP BY / ORDER BY / LIMIT. Keywords and identifiers are
/// case-insensitive; unqualified columns resolve to their unique owner among
/// the FROM tables. LIMIT is accepted and dropped.
///
/// Throws SyntaxError, UnsupportedFeature, UnknownIdentifier, AmbiguousColumn
/// or TypeMismatch.
QueryIR parse(std::string_view sql, const Schema& schema);

}  // namespace qspace
