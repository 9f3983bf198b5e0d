// Copyright (C) 2026 The crossfind Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace crossfind {

using Json = nlohmann::json;

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file then renames over `path`, so readers never
/// observe a partial artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

std::string base64_encode(std::string_view bytes);

/// One named float32 tensor inside a blob file.
struct BlobBlock {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<float> data;
};

/// Binary container shared by embedding tables, indexes and checkpoints:
///
///   8 bytes   magic "XFBLOB01"
///   8 bytes   header length, uint64 little-endian
///   n bytes   JSON header; always carries "byte_order":"little" and
///             "blocks":[{"name":..., "shape":[...]}, ...]
///   ...       each block's float32 values, little-endian, row-major, in
///             header order
struct BlobFile {
    Json header = Json::object();
    std::vector<BlobBlock> blocks;

    const BlobBlock& block(std::string_view name) const;
};

std::string encode_blob(const BlobFile& blob);
BlobFile decode_blob(std::string_view bytes);

void write_blob(const std::filesystem::path& path, const BlobFile& blob);
BlobFile read_blob(const std::filesystem::path& path);

}  // namespace crossfind
