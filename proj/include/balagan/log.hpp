/**
 * Copyright 2026 The balagan-cpp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef BALAGAN_LOG_HPP
#define BALAGAN_LOG_HPP

#include <sstream>
#include <string>
#include <utility>

namespace balagan::log {

enum class Level { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3, kOff = 4 };

void set_level(Level level);
Level level();
void write(Level level, const std::string& message);

// Streams the arguments into one stderr line, e.g. log::info("step ", s).
template <typename... Args>
void emit(Level lvl, Args&&... args) {
  if (lvl < level()) return;
  std::ostringstream out;
  (out << ... << std::forward<Args>(args));
  write(lvl, out.str());
}

template <typename... Args>
void debug(Args&&... args) { emit(Level::kDebug, std::forward<Args>(args)...); }
template <typename... Args>
void info(Args&&... args) { emit(Level::kInfo, std::forward<Args>(args)...); }
template <typename... Args>
void warn(Args&&... args) { emit(Level::kWarn, std::forward<Args>(args)...); }
template <typename... Args>
void error(Args&&... args) { emit(Level::kError, std::forward<Args>(args)...); }

}  // namespace balagan::log

#endif  // BALAGAN_LOG_HPP
