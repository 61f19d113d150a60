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

#include "pattrain/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace pattrain {

namespace {

spdlog::level::level_enum env_level() {
  const char* v = std::getenv("CLICK_LOG");
  if (v == nullptr || *v == '\0') return spdlog::level::info;
  const auto level = spdlog::level::from_str(v);
  // from_str maps unknown names to off; treat those as the default instead.
  if (level == spdlog::level::off && std::string(v) != "off") return spdlog::level::info;
  return level;
}

}  // namespace

std::shared_ptr<spdlog::logger> logger() {
  static const std::shared_ptr<spdlog::logger> log = [] {
    auto l = spdlog::stderr_color_mt("pattrain");
    l->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    l->set_level(env_level());
    return l;
  }();
  return log;
}

void reload_log_level() { logger()->set_level(env_level()); }

}  // namespace pattrain
