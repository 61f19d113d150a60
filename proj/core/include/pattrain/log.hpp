// Copyright 2026 The pattrain Authors. All Rights Reserved.
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

#ifndef PATTRAIN_LOG_HPP_
#define PATTRAIN_LOG_HPP_

#include <memory>

#include <spdlog/logger.h>

namespace pattrain {

// Shared stderr logger. Level comes from CLICK_LOG
// (trace, debug, info, warn, error, off; default info).
std::shared_ptr<spdlog::logger> logger();

/// Re-reads CLICK_LOG; used by tests that change the environment.
void reload_log_level();

}  // namespace pattrain

#endif  // PATTRAIN_LOG_HPP_
