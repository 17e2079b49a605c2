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

#ifndef TROJANLOC_CLI_H_
#define TROJANLOC_CLI_H_

// Stage-based command line front end. Each stage reads the artifacts of the
// stages before it from the work directory and writes only its own.

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "trojanloc/error.h"

namespace trojanloc {

struct ArtifactPaths {
  explicit ArtifactPaths(const std::filesystem::path& work_dir);

  std::filesystem::path corpus;        // preprocess
  std::filesystem::path module_cache;  // embed
  std::filesystem::path line_cache;    // embed
  std::filesystem::path module_ae;     // train-ae
  std::filesystem::path line_ae;       // train-ae
  std::filesystem::path detect;        // train
  std::filesystem::path type;          // train
  std::filesystem::path line;          // train
  std::filesystem::path line_meta;     // train
  std::filesystem::path reports;       // evaluate, localize

  std::filesystem::path Report(const std::string& task) const;
  std::filesystem::path Localization(const std::string& module_id,
                                     const std::string& ext) const;
};

// 1 for validation failures, 2 for I/O and transport failures.
int ExitCodeFor(ErrorCode code);

// Runs one invocation; `args` excludes the program name. Results go to `out`,
// logs to the installed log sink.
int RunCli(const std::vector<std::string>& args, std::ostream& out);

}  // namespace trojanloc

#endif  // TROJANLOC_CLI_H_
