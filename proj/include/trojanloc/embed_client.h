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

#ifndef TROJANLOC_EMBED_CLIENT_H_
#define TROJANLOC_EMBED_CLIENT_H_

// Client for a remote embedding service:
//   GET  {base}/v1/info   -> {"model": str, "d_model": int, "max_tokens": int}
//   POST {base}/v1/embed  {"texts": [...]} -> {"embeddings": [[...], ...]}

#include <span>
#include <string>
#include <vector>

#include "trojanloc/embed.h"

namespace trojanloc {

struct EndpointConfig {
  std::string base_url;
  int timeout_ms = 30000;
  int max_batch = 64;
  int retries = 3;
  // First retry waits backoff_ms, each further retry doubles it.
  int backoff_ms = 100;
  // Chunks in flight at once.
  int concurrency = 1;

  void Validate() const;
};

// Errors: kConnectFailed after retries, kMalformedResponse.
BackendDescriptor FetchInfo(const EndpointConfig& endpoint);

struct EmbedCallStats {
  int requests = 0;  // chunks sent successfully
  int attempts = 0;  // including retries
};

// One vector per text, order-preserving, requests chunked to max_batch.
// Transport errors and 5xx statuses are retried with exponential backoff;
// 4xx is fatal. When expected_d_model > 0 every vector must have that width.
// Errors: kServerError (detail = status), kTimeout, kConnectFailed,
// kLengthMismatch, kMalformedResponse.
std::vector<Vector> EmbedTexts(const EndpointConfig& endpoint,
                               std::span<const std::string> texts,
                               int expected_d_model = 0,
                               EmbedCallStats* stats = nullptr);

class RemoteBackend final : public EmbeddingBackend {
 public:
  // Queries the info route once.
  explicit RemoteBackend(EndpointConfig endpoint);

  BackendDescriptor Describe() const override { return descriptor_; }
  Vector EmbedModuleText(std::string_view text) const override;
  std::vector<Vector> EmbedLineTexts(
      std::span<const std::string> lines) const override;

 private:
  EndpointConfig endpoint_;
  BackendDescriptor descriptor_;
};

}  // namespace trojanloc

#endif  // TROJANLOC_EMBED_CLIENT_H_
