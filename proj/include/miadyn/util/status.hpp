// Copyright 2026 The miadyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MIADYN_UTIL_STATUS_HPP_
#define MIADYN_UTIL_STATUS_HPP_

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define MIADYN_CONCAT_INNER_(a, b) a##b
#define MIADYN_CONCAT_(a, b) MIADYN_CONCAT_INNER_(a, b)

#define MIADYN_RETURN_IF_ERROR(expr)          \
  do {                                        \
    ::absl::Status _miadyn_status = (expr);   \
    if (!_miadyn_status.ok()) return _miadyn_status; \
  } while (0)

#define MIADYN_ASSIGN_OR_RETURN_IMPL_(tmp, lhs, expr) \
  auto tmp = (expr);                                  \
  if (!tmp.ok()) return tmp.status();                 \
  lhs = std::move(tmp).value()

// Evaluates a StatusOr expression and either binds its value or returns the
// error from the enclosing function.
#define MIADYN_ASSIGN_OR_RETURN(lhs, expr) \
  MIADYN_ASSIGN_OR_RETURN_IMPL_(           \
      MIADYN_CONCAT_(_miadyn_statusor_, __LINE__), lhs, expr)

#endif  // MIADYN_UTIL_STATUS_HPP_
