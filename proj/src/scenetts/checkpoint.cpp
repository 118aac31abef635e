// Copyright 2026 scenetts authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "scenetts/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "scenetts/errors.hpp"

namespace scenetts {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'T', 'S', 'C', 'K', 'P', 'T'};

struct RawHeader {
  nlohmann::json json;
  std::streampos payload_offset;
};

RawHeader read_header(std::ifstream& f, const std::string& path,
                      const std::string& expected_kind) {
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0) {
    throw ValidationError("not a scenetts checkpoint: " + path);
  }
  std::uint32_t version = 0;
  std::uint64_t json_len = 0;
  f.read(reinterpret_cast<char*>(&version), sizeof(version));
  f.read(reinterpret_cast<char*>(&json_len), sizeof(json_len));
  if (!f) throw ValidationError("truncated checkpoint header: " + path);
  if (version != static_cast<std::uint32_t>(kCheckpointVersion)) {
    throw ValidationError("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + "): " + path);
  }
  std::string header_text(json_len, '\0');
  f.read(header_text.data(), static_cast<std::streamsize>(json_len));
  if (!f) throw ValidationError("truncated checkpoint header: " + path);

  RawHeader out;
  try {
    out.json = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("corrupt checkpoint header: " + path + ": " + e.what());
  }
  const std::string kind = out.json.value("kind", "");
  if (kind != expected_kind) {
    throw ValidationError("checkpoint kind mismatch: expected '" + expected_kind +
                          "', found '" + kind + "': " + path);
  }
  out.payload_offset = f.tellg();
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& kind,
                     const nlohmann::json& config, const std::vector<Parameter*>& params) {
  nlohmann::json table = nlohmann::json::array();
  for (const Parameter* p : params) {
    table.push_back({{"name", p->name}, {"shape", p->tensor.shape()}});
  }
  const nlohmann::json header{{"kind", kind}, {"config", config}, {"params", table}};
  const std::string header_text = header.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw RuntimeFault("cannot write checkpoint: " + tmp);
    f.write(kMagic, 8);
    const std::uint32_t version = kCheckpointVersion;
    const std::uint64_t json_len = header_text.size();
    f.write(reinterpret_cast<const char*>(&version), sizeof(version));
    f.write(reinterpret_cast<const char*>(&json_len), sizeof(json_len));
    f.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const Parameter* p : params) {
      const auto& v = p->tensor.value();
      f.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
    if (!f) throw RuntimeFault("failed writing checkpoint payload: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

nlohmann::json peek_checkpoint(const std::string& path, const std::string& expected_kind) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open checkpoint: " + path);
  return read_header(f, path, expected_kind).json.at("config");
}

void load_checkpoint_params(const std::string& path, const std::string& expected_kind,
                            const std::vector<Parameter*>& params) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open checkpoint: " + path);
  const RawHeader header = read_header(f, path, expected_kind);

  const auto& table = header.json.at("params");
  if (table.size() != params.size()) {
    throw ValidationError("checkpoint shape table mismatch: " + std::to_string(table.size()) +
                          " stored vs " + std::to_string(params.size()) + " expected: " + path);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string name = table[i].at("name").get<std::string>();
    const Shape shape = table[i].at("shape").get<Shape>();
    if (name != params[i]->name || shape != params[i]->tensor.shape()) {
      throw ValidationError("checkpoint shape table mismatch at entry " + std::to_string(i) +
                            ": stored " + name + shape_str(shape) + " vs expected " +
                            params[i]->name + shape_str(params[i]->tensor.shape()) + ": " +
                            path);
    }
  }
  for (Parameter* p : params) {
    auto& v = p->tensor.value();
    f.read(reinterpret_cast<char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!f) throw ValidationError("truncated checkpoint payload: " + path);
  }
}

}  // namespace scenetts
