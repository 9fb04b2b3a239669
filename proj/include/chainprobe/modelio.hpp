// Copyright 2026 The chainprobe Authors
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

// Inference backends: an OpenAI-compatible chat-completions client, an
// archive that records and replays responses, and wrappers that bound
// concurrency.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "chainprobe/prompting.hpp"

namespace chainprobe {

struct InferenceParams {
  double temperature = 0.5;
  std::uint32_t max_output_tokens = 5000;
  std::string model_id;
  std::chrono::milliseconds timeout{120000};
  // Upper bound on attempts per request, first try included.
  std::uint32_t max_retries = 5;
  std::chrono::milliseconds backoff_base{500};
  // Ask the provider for its reasoning trace (chain collection).
  bool request_reasoning = false;
};

enum class ResponseStatus { kOk, kRefused, kTransportError, kTimeout };

const char* to_string(ResponseStatus s);
ResponseStatus parse_response_status(std::string_view s);

struct TokenUsage {
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
};

struct ModelResponse {
  std::optional<std::string> text;  // present iff status == kOk
  ResponseStatus status = ResponseStatus::kTransportError;
  std::optional<std::string> reasoning;
  std::optional<TokenUsage> usage;
  std::chrono::milliseconds latency{0};
  std::uint32_t attempts = 0;
  std::string error;

  bool ok() const { return status == ResponseStatus::kOk; }

  static ModelResponse success(std::string text);
  static ModelResponse failure(ResponseStatus status, std::string error);
};

struct CompletionRequest {
  std::string rendered;
  // Structured form of the prompt, for backends that read the chain
  // directly instead of the rendered text.
  std::optional<EvalPrompt> prompt;
  // Distinguishes repeated samples of one prompt; part of the archive key
  // when nonzero.
  std::uint32_t sample = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ModelResponse complete(const CompletionRequest& request,
                                 const InferenceParams& params) = 0;
  virtual std::string describe() const = 0;
};

ModelResponse complete(Backend& backend, const std::string& rendered,
                       const InferenceParams& params);

// Hex SHA-256 over a canonical JSON of (prompt, temperature, max tokens,
// model id, sample).
std::string archive_key(std::string_view rendered,
                        const InferenceParams& params, std::uint32_t sample = 0);

struct ArchiveEntry {
  std::string key;
  std::string prompt;
  nlohmann::json params;
  std::optional<std::string> response;
  std::optional<std::string> reasoning;
  ResponseStatus status = ResponseStatus::kOk;
  std::string timestamp;
};

// Append-only JSONL store of responses keyed by archive_key. Existing keys
// are never rewritten; a torn final line from an interrupted write is
// ignored on load.
class ResponseArchive {
 public:
  enum class Mode { kReadWrite, kReadOnly };

  // Opens the archive at `path`, creating it in kReadWrite mode. kReadOnly
  // requires the file to exist and keeps appends in memory. An empty path
  // gives an in-memory archive.
  explicit ResponseArchive(std::string path = {}, Mode mode = Mode::kReadWrite);

  std::optional<ArchiveEntry> find(const std::string& key) const;
  // Returns false, without writing, when the key already exists.
  bool append(ArchiveEntry entry);
  // Convenience for building fixtures.
  bool put(std::string_view rendered, const InferenceParams& params,
           const ModelResponse& response, std::uint32_t sample = 0);

  std::size_t size() const;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, ArchiveEntry> entries_;
  std::ofstream out_;
};

nlohmann::json params_to_json(const InferenceParams& p,
                              std::uint32_t sample = 0);

class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(std::shared_ptr<const ResponseArchive> archive);
  ModelResponse complete(const CompletionRequest& request,
                         const InferenceParams& params) override;
  std::string describe() const override;

 private:
  std::shared_ptr<const ResponseArchive> archive_;
};

// Serves archived responses without calling `inner`; misses are forwarded
// and ok/refused responses appended. attempts is 0 for archive hits.
class RecordingBackend final : public Backend {
 public:
  RecordingBackend(std::shared_ptr<Backend> inner,
                   std::shared_ptr<ResponseArchive> archive);
  ModelResponse complete(const CompletionRequest& request,
                         const InferenceParams& params) override;
  std::string describe() const override;

 private:
  std::shared_ptr<Backend> inner_;
  std::shared_ptr<ResponseArchive> archive_;
};

// Caps the number of concurrent complete() calls into `inner`.
class BoundedBackend final : public Backend {
 public:
  BoundedBackend(std::shared_ptr<Backend> inner, std::size_t max_in_flight);
  ModelResponse complete(const CompletionRequest& request,
                         const InferenceParams& params) override;
  std::string describe() const override;

  std::size_t max_in_flight() const { return limit_; }
  std::size_t peak_in_flight() const { return peak_.load(); }

 private:
  std::shared_ptr<Backend> inner_;
  std::size_t limit_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t in_flight_ = 0;
  std::atomic<std::size_t> peak_{0};
};

struct HttpEndpoint {
  std::string url;  // e.g. https://openrouter.ai/api/v1/chat/completions
  std::string api_key_env = "OPENROUTER_API_KEY";
};

// OpenAI-compatible chat completions. One user message per request; retries
// transport errors, timeouts, 429 and 5xx with exponential backoff (honouring
// Retry-After) up to params.max_retries attempts.
class HttpChatBackend final : public Backend {
 public:
  using Logger = std::function<void(const std::string&)>;

  explicit HttpChatBackend(HttpEndpoint endpoint, Logger logger = {});
  ModelResponse complete(const CompletionRequest& request,
                         const InferenceParams& params) override;
  std::string describe() const override;

  static nlohmann::json request_body(std::string_view rendered,
                                     const InferenceParams& params);

 private:
  struct Attempt;
  Attempt attempt(const std::string& body, const InferenceParams& params);
  void log(const std::string& line) const;

  HttpEndpoint endpoint_;
  std::string scheme_host_port_;
  std::string path_;
  std::optional<std::string> api_key_;
  Logger logger_;
};

// One chain-collection request: the bare question, reasoning requested.
// The returned text is the provider's reasoning trace when it sent one, the
// completion otherwise. Distinct `sample` values are distinct requests.
ModelResponse collect_chain(Backend& backend, const std::string& question,
                            InferenceParams params, std::uint32_t sample = 0);

// Parses a chat-completions response body. Exposed for tests.
ModelResponse parse_chat_response(const std::string& body);

}  // namespace chainprobe
