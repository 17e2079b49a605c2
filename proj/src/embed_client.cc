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

#include "trojanloc/embed_client.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <optional>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "trojanloc/error.h"
#include "trojanloc/log.h"

namespace trojanloc {
namespace {

using json = nlohmann::json;

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

ParsedUrl ParseBaseUrl(const std::string& url) {
  const size_t scheme = url.find("://");
  const size_t path_start =
      url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.origin = url;
  } else {
    out.origin = url.substr(0, path_start);
    out.prefix = url.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') {
      out.prefix.pop_back();
    }
  }
  return out;
}

httplib::Client MakeClient(const EndpointConfig& endpoint,
                           const ParsedUrl& url) {
  httplib::Client client(url.origin);
  const auto timeout = std::chrono::milliseconds(endpoint.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  return client;
}

// Issues a request through `send`, retrying transport failures and 5xx.
template <typename Send>
std::string Exchange(const EndpointConfig& endpoint, const std::string& what,
                     Send&& send, std::atomic<int>* attempts) {
  std::optional<Error> last;
  for (int attempt = 0; attempt <= endpoint.retries; ++attempt) {
    if (attempt > 0) {
      const int wait = endpoint.backoff_ms << std::min(attempt - 1, 16);
      std::this_thread::sleep_for(std::chrono::milliseconds(wait));
      LogDebug(what + ": retry " + std::to_string(attempt));
    }
    if (attempts != nullptr) ++*attempts;
    httplib::Result res = send();
    if (!res) {
      const httplib::Error err = res.error();
      const std::string why = what + ": " + httplib::to_string(err);
      if (err == httplib::Error::Read || err == httplib::Error::Write) {
        last = Error(ErrorCode::kTimeout, why);
      } else {
        last = Error(ErrorCode::kConnectFailed, why);
      }
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    Error status_error(ErrorCode::kServerError,
                       what + ": HTTP " + std::to_string(res->status),
                       res->status);
    if (res->status < 500) throw status_error;
    last = status_error;
  }
  throw *last;
}

std::vector<Vector> ParseEmbeddings(const std::string& body, size_t expected,
                                    int d_model) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedResponse, e.what());
  }
  if (!j.is_object() || !j.contains("embeddings") ||
      !j["embeddings"].is_array()) {
    throw Error(ErrorCode::kMalformedResponse, "missing embeddings array");
  }
  const auto& arr = j["embeddings"];
  if (arr.size() != expected) {
    throw Error(ErrorCode::kLengthMismatch,
                "expected " + std::to_string(expected) + " embeddings, got " +
                    std::to_string(arr.size()));
  }
  std::vector<Vector> out;
  out.reserve(expected);
  for (const auto& row : arr) {
    if (!row.is_array()) {
      throw Error(ErrorCode::kMalformedResponse, "embedding is not an array");
    }
    if (d_model > 0 && row.size() != static_cast<size_t>(d_model)) {
      throw Error(ErrorCode::kMalformedResponse,
                  "embedding width " + std::to_string(row.size()) +
                      " != advertised d_model " + std::to_string(d_model));
    }
    Vector v;
    v.reserve(row.size());
    for (const auto& x : row) {
      if (!x.is_number()) {
        throw Error(ErrorCode::kMalformedResponse, "non-numeric entry");
      }
      v.push_back(x.get<double>());
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

void EndpointConfig::Validate() const {
  if (base_url.empty()) {
    throw Error(ErrorCode::kConfigInvalid, "endpoint base_url is empty");
  }
  if (retries < 0) throw Error(ErrorCode::kConfigInvalid, "retries < 0");
  if (max_batch < 1) throw Error(ErrorCode::kConfigInvalid, "max_batch < 1");
  if (timeout_ms < 1) throw Error(ErrorCode::kConfigInvalid, "timeout_ms < 1");
  if (concurrency < 1) {
    throw Error(ErrorCode::kConfigInvalid, "concurrency < 1");
  }
}

BackendDescriptor FetchInfo(const EndpointConfig& endpoint) {
  endpoint.Validate();
  const ParsedUrl url = ParseBaseUrl(endpoint.base_url);
  const std::string path = url.prefix + "/v1/info";
  httplib::Client client = MakeClient(endpoint, url);
  const std::string body = Exchange(
      endpoint, "GET " + path, [&] { return client.Get(path); }, nullptr);
  BackendDescriptor desc;
  try {
    const json j = json::parse(body);
    desc.name = j.at("model").get<std::string>();
    desc.d_model = j.at("d_model").get<int>();
    desc.max_tokens = j.at("max_tokens").get<int>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse, e.what());
  }
  if (desc.d_model < 1 || desc.max_tokens < 1) {
    throw Error(ErrorCode::kMalformedResponse, "non-positive dimensions");
  }
  return desc;
}

std::vector<Vector> EmbedTexts(const EndpointConfig& endpoint,
                               std::span<const std::string> texts,
                               int expected_d_model, EmbedCallStats* stats) {
  endpoint.Validate();
  if (texts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no texts to embed");
  }
  const ParsedUrl url = ParseBaseUrl(endpoint.base_url);
  const std::string path = url.prefix + "/v1/embed";
  const size_t batch = static_cast<size_t>(endpoint.max_batch);
  const size_t n_chunks = (texts.size() + batch - 1) / batch;

  std::vector<Vector> out(texts.size());
  std::atomic<size_t> next_chunk{0};
  std::atomic<int> requests{0};
  std::atomic<int> attempts{0};
  std::mutex error_mu;
  std::optional<Error> first_error;

  auto worker = [&] {
    httplib::Client client = MakeClient(endpoint, url);
    while (true) {
      const size_t c = next_chunk.fetch_add(1);
      if (c >= n_chunks) return;
      {
        std::lock_guard<std::mutex> lock(error_mu);
        if (first_error) return;
      }
      const size_t begin = c * batch;
      const size_t end = std::min(texts.size(), begin + batch);
      try {
        json body;
        body["texts"] = json::array();
        for (size_t i = begin; i < end; ++i) body["texts"].push_back(texts[i]);
        const std::string payload = body.dump();
        const std::string response = Exchange(
            endpoint, "POST " + path,
            [&] { return client.Post(path, payload, "application/json"); },
            &attempts);
        auto vectors = ParseEmbeddings(response, end - begin, expected_d_model);
        for (size_t i = begin; i < end; ++i) {
          out[i] = std::move(vectors[i - begin]);
        }
        ++requests;
      } catch (const Error& e) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = e;
        return;
      }
    }
  };

  const size_t n_workers =
      std::min(n_chunks, static_cast<size_t>(endpoint.concurrency));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (stats != nullptr) {
    stats->requests = requests.load();
    stats->attempts = attempts.load();
  }
  if (first_error) throw *first_error;
  return out;
}

RemoteBackend::RemoteBackend(EndpointConfig endpoint)
    : endpoint_(std::move(endpoint)), descriptor_(FetchInfo(endpoint_)) {}

Vector RemoteBackend::EmbedModuleText(std::string_view text) const {
  const std::string owned(text);
  return EmbedTexts(endpoint_, std::span<const std::string>(&owned, 1),
                    descriptor_.d_model)
      .front();
}

std::vector<Vector> RemoteBackend::EmbedLineTexts(
    std::span<const std::string> lines) const {
  return EmbedTexts(endpoint_, lines, descriptor_.d_model);
}

}  // namespace trojanloc
