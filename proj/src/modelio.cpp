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

#include "chainprobe/modelio.hpp"

#include <httplib.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <sstream>
#include <thread>

#include "chainprobe/error.hpp"

namespace chainprobe {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

const char* to_string(ResponseStatus s) {
  switch (s) {
    case ResponseStatus::kOk: return "ok";
    case ResponseStatus::kRefused: return "refused";
    case ResponseStatus::kTransportError: return "transport_error";
    case ResponseStatus::kTimeout: return "timeout";
  }
  return "transport_error";
}

ResponseStatus parse_response_status(std::string_view s) {
  if (s == "ok") return ResponseStatus::kOk;
  if (s == "refused") return ResponseStatus::kRefused;
  if (s == "transport_error") return ResponseStatus::kTransportError;
  if (s == "timeout") return ResponseStatus::kTimeout;
  throw parse_error("unknown response status '" + std::string(s) + "'");
}

ModelResponse ModelResponse::success(std::string text) {
  ModelResponse r;
  r.text = std::move(text);
  r.status = ResponseStatus::kOk;
  r.attempts = 1;
  return r;
}

ModelResponse ModelResponse::failure(ResponseStatus status, std::string error) {
  ModelResponse r;
  r.status = status;
  r.error = std::move(error);
  r.attempts = 1;
  return r;
}

ModelResponse complete(Backend& backend, const std::string& rendered,
                       const InferenceParams& params) {
  CompletionRequest req;
  req.rendered = rendered;
  return backend.complete(req, params);
}

json params_to_json(const InferenceParams& p, std::uint32_t sample) {
  json j = {{"model", p.model_id},
            {"temperature", p.temperature},
            {"max_tokens", p.max_output_tokens}};
  if (sample != 0) j["sample"] = sample;
  return j;
}

namespace {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(ErrorCode::kBackend, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json entry_to_json(const ArchiveEntry& e) {
  json j = {{"key", e.key},
            {"prompt", e.prompt},
            {"params", e.params},
            {"response", e.response ? json(*e.response) : json(nullptr)},
            {"status", to_string(e.status)},
            {"timestamp", e.timestamp}};
  if (e.reasoning) j["reasoning"] = *e.reasoning;
  return j;
}

ArchiveEntry entry_from_json(const json& j) {
  ArchiveEntry e;
  e.key = j.at("key").get<std::string>();
  e.prompt = j.value("prompt", "");
  e.params = j.value("params", json::object());
  if (j.contains("response") && j["response"].is_string()) {
    e.response = j["response"].get<std::string>();
  }
  if (j.contains("reasoning") && j["reasoning"].is_string()) {
    e.reasoning = j["reasoning"].get<std::string>();
  }
  e.status = parse_response_status(j.value("status", "ok"));
  e.timestamp = j.value("timestamp", "");
  return e;
}

}  // namespace

std::string archive_key(std::string_view rendered,
                        const InferenceParams& params, std::uint32_t sample) {
  json material = params_to_json(params, sample);
  material["prompt"] = std::string(rendered);
  // nlohmann::json objects are key-sorted, so dump() is canonical.
  return sha256_hex(material.dump());
}

ResponseArchive::ResponseArchive(std::string path, Mode mode)
    : path_(std::move(path)) {
  if (path_.empty()) return;
  {
    std::ifstream in(path_, std::ios::binary);
    if (!in && mode == Mode::kReadOnly) {
      throw io_error("cannot open archive " + path_);
    }
    std::string line;
    std::size_t lineno = 0;
    while (in && std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const bool last = in.peek() == std::char_traits<char>::eof();
      try {
        ArchiveEntry e = entry_from_json(json::parse(line));
        entries_.try_emplace(e.key, std::move(e));
      } catch (const std::exception& ex) {
        if (last) break;  // torn final write
        throw parse_error(path_ + ":" + std::to_string(lineno) +
                          ": bad archive entry: " + ex.what());
      }
    }
  }
  if (mode == Mode::kReadOnly) return;
  bool torn_tail = false;
  {
    std::ifstream in(path_, std::ios::binary | std::ios::ate);
    if (in && in.tellg() > 0) {
      in.seekg(-1, std::ios::end);
      torn_tail = in.get() != '\n';
    }
  }
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw io_error("cannot open archive " + path_ + " for append");
  // A run cut mid-write leaves a partial line; start ours on a fresh one.
  if (torn_tail) out_ << '\n';
}

std::optional<ArchiveEntry> ResponseArchive::find(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool ResponseArchive::append(ArchiveEntry entry) {
  std::lock_guard lock(mu_);
  if (entries_.count(entry.key) != 0) return false;
  if (entry.timestamp.empty()) entry.timestamp = utc_timestamp();
  if (out_.is_open()) {
    out_ << entry_to_json(entry).dump() << '\n';
    out_.flush();
    if (!out_) throw io_error("write to archive " + path_ + " failed");
  }
  entries_.emplace(entry.key, std::move(entry));
  return true;
}

bool ResponseArchive::put(std::string_view rendered,
                          const InferenceParams& params,
                          const ModelResponse& response, std::uint32_t sample) {
  ArchiveEntry e;
  e.key = archive_key(rendered, params, sample);
  e.prompt = std::string(rendered);
  e.params = params_to_json(params, sample);
  e.response = response.text;
  e.reasoning = response.reasoning;
  e.status = response.status;
  return append(std::move(e));
}

std::size_t ResponseArchive::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

ReplayBackend::ReplayBackend(std::shared_ptr<const ResponseArchive> archive)
    : archive_(std::move(archive)) {
  if (!archive_) throw invalid_argument("replay backend needs an archive");
}

ModelResponse ReplayBackend::complete(const CompletionRequest& request,
                                      const InferenceParams& params) {
  const auto entry =
      archive_->find(archive_key(request.rendered, params, request.sample));
  if (!entry) {
    return ModelResponse::failure(ResponseStatus::kTransportError, "no fixture");
  }
  ModelResponse r;
  r.status = entry->status;
  r.attempts = 1;
  if (entry->status == ResponseStatus::kOk) {
    r.text = entry->response.value_or("");
  }
  r.reasoning = entry->reasoning;
  return r;
}

std::string ReplayBackend::describe() const {
  return "replay:" + archive_->path();
}

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner,
                                   std::shared_ptr<ResponseArchive> archive)
    : inner_(std::move(inner)), archive_(std::move(archive)) {}

ModelResponse RecordingBackend::complete(const CompletionRequest& request,
                                         const InferenceParams& params) {
  const std::string key = archive_key(request.rendered, params, request.sample);
  if (const auto entry = archive_->find(key)) {
    ModelResponse r;
    r.status = entry->status;
    r.attempts = 0;
    if (entry->status == ResponseStatus::kOk) r.text = entry->response.value_or("");
    r.reasoning = entry->reasoning;
    return r;
  }
  ModelResponse r = inner_->complete(request, params);
  // Transport failures are not facts about the model; leave them out so a
  // later run retries them.
  if (r.status == ResponseStatus::kOk || r.status == ResponseStatus::kRefused) {
    archive_->put(request.rendered, params, r, request.sample);
  }
  return r;
}

std::string RecordingBackend::describe() const {
  return inner_->describe() + " (recording to " + archive_->path() + ")";
}

BoundedBackend::BoundedBackend(std::shared_ptr<Backend> inner,
                               std::size_t max_in_flight)
    : inner_(std::move(inner)), limit_(std::max<std::size_t>(1, max_in_flight)) {}

ModelResponse BoundedBackend::complete(const CompletionRequest& request,
                                       const InferenceParams& params) {
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < limit_; });
    ++in_flight_;
    std::size_t peak = peak_.load();
    while (in_flight_ > peak && !peak_.compare_exchange_weak(peak, in_flight_)) {
    }
  }
  struct Release {
    BoundedBackend* self;
    ~Release() {
      {
        std::lock_guard lock(self->mu_);
        --self->in_flight_;
      }
      self->cv_.notify_one();
    }
  } release{this};
  return inner_->complete(request, params);
}

std::string BoundedBackend::describe() const { return inner_->describe(); }

// ---------------------------------------------------------------------------
// HTTP

struct HttpChatBackend::Attempt {
  enum class Outcome { kDone, kRetry, kFatal };
  Outcome outcome = Outcome::kFatal;
  ModelResponse response;
  std::chrono::milliseconds retry_after{0};
};

HttpChatBackend::HttpChatBackend(HttpEndpoint endpoint, Logger logger)
    : endpoint_(std::move(endpoint)), logger_(std::move(logger)) {
  const std::string& url = endpoint_.url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw invalid_argument("endpoint URL needs a scheme: " + url);
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw invalid_argument("unsupported URL scheme '" + scheme + "'");
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") {
    throw invalid_argument("built without TLS support; cannot use " + url);
  }
#endif
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (!endpoint_.api_key_env.empty()) {
    if (const char* key = std::getenv(endpoint_.api_key_env.c_str())) {
      if (*key != '\0') api_key_ = key;
    }
  }
  if (!api_key_) {
    log("no credential in $" + endpoint_.api_key_env +
        "; sending unauthenticated requests");
  }
}

std::string HttpChatBackend::describe() const { return "live:" + endpoint_.url; }

void HttpChatBackend::log(const std::string& line) const {
  if (logger_) logger_(line);
}

json HttpChatBackend::request_body(std::string_view rendered,
                                   const InferenceParams& params) {
  json body = {
      {"model", params.model_id},
      {"messages", json::array({{{"role", "user"},
                                 {"content", std::string(rendered)}}})},
      {"temperature", params.temperature},
      {"max_tokens", params.max_output_tokens},
  };
  if (params.request_reasoning) body["reasoning"] = json::object();
  return body;
}

ModelResponse parse_chat_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    return ModelResponse::failure(ResponseStatus::kTransportError,
                                  std::string("unparseable response: ") + e.what());
  }
  if (!j.contains("choices") || !j["choices"].is_array() ||
      j["choices"].empty()) {
    return ModelResponse::failure(ResponseStatus::kTransportError,
                                  "response has no choices");
  }
  const json& choice = j["choices"][0];
  const json message = choice.value("message", json::object());
  const std::string finish = choice.contains("finish_reason") &&
                                     choice["finish_reason"].is_string()
                                 ? choice["finish_reason"].get<std::string>()
                                 : "";
  ModelResponse r;
  r.attempts = 1;
  if (message.contains("reasoning") && message["reasoning"].is_string()) {
    r.reasoning = message["reasoning"].get<std::string>();
  }
  if (j.contains("usage") && j["usage"].is_object()) {
    TokenUsage u;
    u.prompt_tokens = j["usage"].value("prompt_tokens", 0ull);
    u.completion_tokens = j["usage"].value("completion_tokens", 0ull);
    r.usage = u;
  }
  const bool refusal = message.contains("refusal") &&
                       message["refusal"].is_string() &&
                       !message["refusal"].get<std::string>().empty();
  if (refusal || finish == "content_filter") {
    r.status = ResponseStatus::kRefused;
    r.error = refusal ? message["refusal"].get<std::string>() : "content_filter";
    return r;
  }
  r.status = ResponseStatus::kOk;
  r.text = message.contains("content") && message["content"].is_string()
               ? message["content"].get<std::string>()
               : "";
  return r;
}

HttpChatBackend::Attempt HttpChatBackend::attempt(const std::string& body,
                                                  const InferenceParams& params) {
  Attempt a;
  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(params.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
      params.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (api_key_) headers.emplace("Authorization", "Bearer " + *api_key_);

  const auto start = Clock::now();
  auto res = client.Post(path_, headers, body, "application/json");
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      Clock::now() - start);

  if (!res) {
    const auto err = res.error();
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           (err == httplib::Error::Read && elapsed >= params.timeout);
    a.response = ModelResponse::failure(
        timed_out ? ResponseStatus::kTimeout : ResponseStatus::kTransportError,
        httplib::to_string(err));
    a.outcome = Attempt::Outcome::kRetry;
    return a;
  }
  const int status = res->status;
  if (status == 429 || status >= 500) {
    a.response = ModelResponse::failure(ResponseStatus::kTransportError,
                                        "HTTP " + std::to_string(status));
    if (res->has_header("Retry-After")) {
      const std::string v = res->get_header_value("Retry-After");
      char* end = nullptr;
      const double s = std::strtod(v.c_str(), &end);
      if (end != v.c_str() && s >= 0) {
        a.retry_after = std::chrono::milliseconds(
            static_cast<long long>(std::min(s, 60.0) * 1000));
      }
    }
    a.outcome = Attempt::Outcome::kRetry;
    return a;
  }
  if (status != 200) {
    const bool moderated = res->body.find("moderation") != std::string::npos ||
                           res->body.find("flagged") != std::string::npos;
    a.response = ModelResponse::failure(
        moderated ? ResponseStatus::kRefused : ResponseStatus::kTransportError,
        "HTTP " + std::to_string(status) + ": " + res->body.substr(0, 200));
    a.outcome = Attempt::Outcome::kFatal;
    return a;
  }
  a.response = parse_chat_response(res->body);
  a.outcome = Attempt::Outcome::kDone;
  return a;
}

ModelResponse HttpChatBackend::complete(const CompletionRequest& request,
                                        const InferenceParams& params) {
  const std::string body = request_body(request.rendered, params).dump();
  const std::uint32_t budget = std::max<std::uint32_t>(1, params.max_retries);
  const auto start = Clock::now();
  Attempt last;
  std::uint32_t n = 0;
  while (n < budget) {
    ++n;
    last = attempt(body, params);
    std::ostringstream line;
    line << describe() << " attempt " << n << "/" << budget << ": "
         << (last.outcome == Attempt::Outcome::kDone
                 ? to_string(last.response.status)
                 : last.response.error);
    log(line.str());
    if (last.outcome != Attempt::Outcome::kRetry || n == budget) break;
    std::chrono::milliseconds wait =
        params.backoff_base * (1ll << std::min<std::uint32_t>(n - 1, 16));
    wait = std::max(wait, last.retry_after);
    std::this_thread::sleep_for(wait);
  }
  ModelResponse r = std::move(last.response);
  r.attempts = n;
  r.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      Clock::now() - start);
  return r;
}

ModelResponse collect_chain(Backend& backend, const std::string& question,
                            InferenceParams params, std::uint32_t sample) {
  params.request_reasoning = true;
  CompletionRequest req;
  req.rendered = question;
  req.sample = sample;
  ModelResponse r = backend.complete(req, params);
  if (r.ok() && r.reasoning && !r.reasoning->empty()) r.text = r.reasoning;
  return r;
}

}  // namespace chainprobe
