/*
 *  Copyright 2026 The sdgjudge Authors. All Rights Reserved.
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */
#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <iostream>
#include <memory>
#include <mutex>

#include "sdgjudge/digest.hpp"
#include "sdgjudge/error.hpp"
#include "sdgjudge/log.hpp"

namespace sdgjudge {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kConfig: return "configuration error";
    case ErrorCode::kNotFound: return "not found";
    case ErrorCode::kCredential: return "credential error";
    case ErrorCode::kBackendUnavailable: return "backend unavailable";
    case ErrorCode::kMalformedResponse: return "malformed response";
    case ErrorCode::kScriptMiss: return "replay script miss";
    case ErrorCode::kUndefinedComparison: return "undefined comparison";
    case ErrorCode::kEmptyRun: return "empty run";
    case ErrorCode::kArity: return "arity error";
    case ErrorCode::kValidation: return "validation error";
    case ErrorCode::kHttp: return "http error";
    case ErrorCode::kInternal: return "internal error";
  }
  return "unknown error";
}

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
    throw Error(ErrorCode::kInternal, "sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0x0f]);
  }
  return out;
}

std::string fixed_decimal(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

namespace log {
namespace {

std::mutex g_mutex;
Sink g_sink;
Level g_min_level = Level::kInfo;

const char* level_tag(Level level) {
  switch (level) {
    case Level::kDebug: return "debug";
    case Level::kInfo: return "info";
    case Level::kWarning: return "warning";
    case Level::kError: return "error";
  }
  return "?";
}

}  // namespace

void set_sink(Sink sink) {
  std::lock_guard lock(g_mutex);
  g_sink = std::move(sink);
}

void set_min_level(Level level) {
  std::lock_guard lock(g_mutex);
  g_min_level = level;
}

void write(Level level, std::string_view message) {
  Sink sink;
  {
    std::lock_guard lock(g_mutex);
    if (level < g_min_level) return;
    sink = g_sink;
  }
  if (sink) {
    sink(level, message);
    return;
  }
  std::lock_guard lock(g_mutex);
  std::cerr << "[sdgjudge " << level_tag(level) << "] " << message << '\n';
}

}  // namespace log
}  // namespace sdgjudge
