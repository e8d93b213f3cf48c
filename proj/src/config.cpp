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
#include "sdgjudge/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "sdgjudge/error.hpp"

namespace sdgjudge::config {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class TomlReader {
 public:
  explicit TomlReader(std::string_view text) : s_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        table = header(root);
      } else {
        key_value(*table);
      }
      end_of_line();
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kConfig, "config line " + std::to_string(line_) + ": " + what);
  }

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }

  char take() {
    const char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') ++pos_;
    }
  }

  void skip_blank_lines() {
    while (!eof()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\r') ++pos_;
      if (peek() != '\n') return;
      take();
    }
  }

  // Whitespace, comments and newlines, as allowed inside arrays.
  void skip_array_space() {
    while (!eof()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\r' || peek() == '\n') {
        take();
      } else {
        return;
      }
    }
  }

  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (eof()) return;
    if (peek() != '\n') fail(std::string("unexpected '") + peek() + "'");
    take();
  }

  std::string key() {
    skip_spaces();
    if (peek() == '"') return basic_string();
    if (peek() == '\'') return literal_string();
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                      peek() == '-')) {
      ++pos_;
    }
    if (pos_ == start) fail("expected a key");
    std::string k(s_.substr(start, pos_ - start));
    skip_spaces();
    if (peek() == '.') fail("dotted keys are not supported");
    return k;
  }

  json* header(json& root) {
    take();
    const bool array = peek() == '[';
    if (array) take();
    const std::string name = key();
    skip_spaces();
    if (take() != ']' || (array && (eof() || take() != ']'))) fail("malformed table header");
    if (array) {
      json& arr = root[name];
      if (arr.is_null()) arr = json::array();
      if (!arr.is_array()) fail("'" + name + "' is not an array of tables");
      arr.push_back(json::object());
      return &arr.back();
    }
    if (!defined_tables_.insert(name).second) fail("table [" + name + "] defined twice");
    json& t = root[name];
    if (t.is_null()) t = json::object();
    if (!t.is_object()) fail("'" + name + "' is not a table");
    return &t;
  }

  void key_value(json& table) {
    const std::string k = key();
    skip_spaces();
    if (eof() || take() != '=') fail("expected '=' after '" + k + "'");
    skip_spaces();
    if (table.contains(k)) fail("key '" + k + "' defined twice");
    table[k] = value();
  }

  json value() {
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (c == '{') fail("inline tables are not supported");
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return number();
  }

  json array() {
    take();
    json out = json::array();
    while (true) {
      skip_array_space();
      if (eof()) fail("unterminated array");
      if (peek() == ']') {
        take();
        return out;
      }
      out.push_back(value());
      skip_array_space();
      if (peek() == ',') {
        take();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  json number() {
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' ||
                      peek() == '-' || peek() == '.' || peek() == '_')) {
      ++pos_;
    }
    std::string token;
    for (char ch : s_.substr(start, pos_ - start)) {
      if (ch != '_') token += ch;
    }
    if (token.empty()) fail("expected a value");
    const char* first = token.data() + (token[0] == '+' ? 1 : 0);
    const char* last = token.data() + token.size();
    if (token.find_first_of(".eE") == std::string::npos) {
      long long v = 0;
      const auto [end, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || end != last) fail("bad integer '" + token + "'");
      return v;
    }
    double v = 0;
    const auto [end, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || end != last) fail("bad number '" + token + "'");
    return v;
  }

  std::string literal_string() {
    take();
    std::string out;
    while (!eof() && peek() != '\'' && peek() != '\n') out += take();
    if (eof() || take() != '\'') fail("unterminated string");
    return out;
  }

  std::string basic_string() {
    take();
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = take();
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (eof()) fail("unterminated escape");
      switch (const char e = take()) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case 'u': append_utf8(out, hex(4)); break;
        case 'U': append_utf8(out, hex(8)); break;
        default: fail(std::string("unknown escape \\") + e);
      }
    }
  }

  unsigned hex(int digits) {
    if (pos_ + static_cast<std::size_t>(digits) > s_.size()) fail("short unicode escape");
    unsigned v = 0;
    const auto [end, ec] = std::from_chars(s_.data() + pos_, s_.data() + pos_ + digits, v, 16);
    if (ec != std::errc() || end != s_.data() + pos_ + digits) fail("bad unicode escape");
    pos_ += static_cast<std::size_t>(digits);
    return v;
  }

  void append_utf8(std::string& out, unsigned cp) {
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) fail("invalid code point");
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::set<std::string> defined_tables_;
};

const json& section(const json& root, const char* name) {
  static const json kEmpty = json::object();
  if (!root.contains(name)) return kEmpty;
  const json& s = root[name];
  if (!s.is_object()) throw Error(ErrorCode::kConfig, std::string("[") + name + "] must be a table");
  return s;
}

template <typename T>
std::optional<T> get(const json& table, const char* section_name, const char* key) {
  if (!table.contains(key)) return std::nullopt;
  try {
    return table[key].get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kConfig, std::string(section_name) + "." + key + " has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) {
    throw Error(ErrorCode::kConfig, std::string(what) + " not found: " + p.string());
  }
}

llm::ModelConfig model_from_json(const json& m) {
  if (!m.is_object()) throw Error(ErrorCode::kConfig, "[[models]] entries must be tables");
  llm::ModelConfig cfg;
  cfg.model_id = get<std::string>(m, "models", "id").value_or("");
  cfg.base_url = get<std::string>(m, "models", "base_url").value_or("");
  cfg.credential_env = get<std::string>(m, "models", "credential_env");
  if (m.contains("api_key") || m.contains("token")) {
    throw Error(ErrorCode::kConfig, "model '" + cfg.model_id +
                                        "': credentials belong in an environment variable "
                                        "named by credential_env");
  }
  cfg.context_window_tokens =
      get<int>(m, "models", "context_window_tokens").value_or(cfg.context_window_tokens);
  cfg.max_retries = get<int>(m, "models", "max_retries").value_or(cfg.max_retries);
  cfg.max_concurrent = get<int>(m, "models", "max_concurrent").value_or(cfg.max_concurrent);
  if (auto t = get<long long>(m, "models", "timeout_ms")) {
    if (*t <= 0) throw Error(ErrorCode::kConfig, cfg.model_id + ": timeout_ms must be > 0");
    cfg.timeout = std::chrono::milliseconds(*t);
  }
  if (auto b = get<long long>(m, "models", "backoff_base_ms")) {
    cfg.backoff.base = std::chrono::milliseconds(*b);
  }
  llm::validate(cfg);
  return cfg;
}

}  // namespace

json parse_toml(std::string_view text) { return TomlReader(text).parse(); }

PipelineConfig default_config(const fs::path& data_dir) {
  PipelineConfig cfg;
  cfg.base_dir = fs::current_path();
  cfg.corpus_path = cfg.base_dir / "corpus.jsonl";
  cfg.registry_path = data_dir / "sdg_registry.json";
  cfg.prompt_specs = {data_dir / "prompt_sdg1.json"};
  cfg.out_dir = cfg.base_dir / "sdgjudge-out";
  return cfg;
}

PipelineConfig config_from_json(const json& root, const fs::path& base_dir,
                                const fs::path& data_dir) {
  if (!root.is_object()) throw Error(ErrorCode::kConfig, "config must be a table");
  PipelineConfig cfg = default_config(data_dir);
  cfg.base_dir = base_dir;
  cfg.corpus_path = base_dir / "corpus.jsonl";
  cfg.out_dir = base_dir / "sdgjudge-out";

  const json& corpus = section(root, "corpus");
  for (const auto& p : get<std::vector<std::string>>(corpus, "corpus", "inputs").value_or(
           std::vector<std::string>{})) {
    cfg.corpus_inputs.push_back(resolve(base_dir, p));
  }
  if (auto f = get<std::string>(corpus, "corpus", "format")) {
    try {
      cfg.input_format = corpus::parse_input_format(*f);
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, e.what());
    }
  }
  if (auto p = get<std::string>(corpus, "corpus", "path")) cfg.corpus_path = resolve(base_dir, *p);
  if (auto p = get<std::string>(corpus, "corpus", "copyright_patterns")) {
    cfg.copyright_patterns = resolve(base_dir, *p);
    require_file(*cfg.copyright_patterns, "copyright pattern file");
  }

  if (auto p = get<std::string>(section(root, "registry"), "registry", "path")) {
    cfg.registry_path = resolve(base_dir, *p);
  }
  require_file(cfg.registry_path, "registry");

  if (auto specs = get<std::vector<std::string>>(section(root, "prompt"), "prompt", "specs")) {
    cfg.prompt_specs.clear();
    for (const auto& p : *specs) cfg.prompt_specs.push_back(resolve(base_dir, p));
  }
  for (const auto& p : cfg.prompt_specs) require_file(p, "prompt spec");

  const json& eval = section(root, "evaluation");
  cfg.workers = get<int>(eval, "evaluation", "workers").value_or(cfg.workers);
  cfg.reasks = get<int>(eval, "evaluation", "reasks").value_or(cfg.reasks);
  cfg.chars_per_token = get<double>(eval, "evaluation", "chars_per_token").value_or(cfg.chars_per_token);
  if (cfg.workers < 1) throw Error(ErrorCode::kConfig, "evaluation.workers must be >= 1");
  if (cfg.reasks < 0) throw Error(ErrorCode::kConfig, "evaluation.reasks must be >= 0");
  if (cfg.chars_per_token <= 0) throw Error(ErrorCode::kConfig, "evaluation.chars_per_token must be > 0");

  if (root.contains("models")) {
    if (!root["models"].is_array()) throw Error(ErrorCode::kConfig, "models must be [[models]] tables");
    std::set<std::string> ids;
    for (const auto& m : root["models"]) {
      cfg.models.push_back(model_from_json(m));
      if (!ids.insert(cfg.models.back().model_id).second) {
        throw Error(ErrorCode::kConfig, "model '" + cfg.models.back().model_id + "' configured twice");
      }
    }
  }

  const json& ens = section(root, "ensemble");
  if (auto r = get<std::string>(ens, "ensemble", "rule")) cfg.ensemble.rule = ensemble::parse_rule(*r);
  cfg.ensemble.members = get<std::vector<std::string>>(ens, "ensemble", "members").value_or(
      std::vector<std::string>{});

  if (auto p = get<std::string>(section(root, "cache"), "cache", "path")) {
    cfg.cache_path = resolve(base_dir, *p);
  }
  if (auto p = get<std::string>(section(root, "output"), "output", "dir")) {
    cfg.out_dir = resolve(base_dir, *p);
  }
  return cfg;
}

PipelineConfig load_config(const fs::path& path, const fs::path& data_dir) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  json root;
  if (path.extension() == ".json") {
    try {
      root = json::parse(buf.str());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
    }
  } else {
    root = parse_toml(buf.str());
  }
  const fs::path base = fs::absolute(path).parent_path();
  return config_from_json(root, base, data_dir);
}

}  // namespace sdgjudge::config
