// Copyright 2026 The TrojanLoC Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "trojanloc/log.h"

#include <iostream>
#include <mutex>
#include <string>
#include <utility>

namespace trojanloc {
namespace {

std::mutex& LogMutex() {
  static std::mutex mu;
  return mu;
}

LogLevel& Threshold() {
  static LogLevel level = LogLevel::kInfo;
  return level;
}

LogSink& Sink() {
  static LogSink sink;
  return sink;
}

const char* LevelTag(LogLevel level) {
  switch (level) {
    case LogLevel::kDebug: return "D";
    case LogLevel::kInfo: return "I";
    case LogLevel::kWarning: return "W";
    case LogLevel::kError: return "E";
  }
  return "?";
}

}  // namespace

void SetLogLevel(LogLevel level) {
  std::lock_guard<std::mutex> lock(LogMutex());
  Threshold() = level;
}

LogLevel GetLogLevel() {
  std::lock_guard<std::mutex> lock(LogMutex());
  return Threshold();
}

LogSink SetLogSink(LogSink sink) {
  std::lock_guard<std::mutex> lock(LogMutex());
  return std::exchange(Sink(), std::move(sink));
}

void Log(LogLevel level, std::string_view message) {
  std::lock_guard<std::mutex> lock(LogMutex());
  if (level < Threshold()) return;
  if (Sink()) {
    Sink()(level, message);
    return;
  }
  std::cerr << "[" << LevelTag(level) << "] " << message << '\n';
}

}  // namespace trojanloc
