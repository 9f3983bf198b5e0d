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

#include "crossfind/io.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "crossfind/error.hpp"

namespace crossfind {

namespace {

constexpr std::string_view kMagic = "XFBLOB01";

void append_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

std::uint64_t read_u64_le(std::string_view in) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
    }
    return v;
}

void append_f32_le(std::string& out, float f) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
}

float read_f32_le(const char* p) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) {
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    }
    return std::bit_cast<float>(bits);
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto d : shape) {
        n *= d;
    }
    return n;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::kNotFound, "cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            fail(ErrorKind::kIo, "cannot write " + tmp.string());
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            fs::remove(tmp, ignored);
            fail(ErrorKind::kIo, "short write to " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        fs::remove(tmp, ignored);
        fail(ErrorKind::kIo, "cannot rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
    }
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
    SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), digest.data());
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(digest.size() * 2);
    for (unsigned char c : digest) {
        out.push_back(kHex[c >> 4]);
        out.push_back(kHex[c & 0xf]);
    }
    return out;
}

std::string base64_encode(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

const BlobBlock& BlobFile::block(std::string_view name) const {
    for (const auto& b : blocks) {
        if (b.name == name) {
            return b;
        }
    }
    fail(ErrorKind::kParse, "blob has no block named '" + std::string(name) + "'");
}

std::string encode_blob(const BlobFile& blob) {
    Json header = blob.header;
    header["byte_order"] = "little";
    Json blocks = Json::array();
    std::size_t payload = 0;
    for (const auto& b : blob.blocks) {
        require(element_count(b.shape) == b.data.size(), ErrorKind::kInvalidArgument,
                "block '" + b.name + "' shape does not match its data length");
        blocks.push_back({{"name", b.name}, {"shape", b.shape}});
        payload += b.data.size() * 4;
    }
    header["blocks"] = std::move(blocks);
    const std::string text = header.dump();

    std::string out;
    out.reserve(kMagic.size() + 8 + text.size() + payload);
    out.append(kMagic);
    append_u64_le(out, text.size());
    out.append(text);
    for (const auto& b : blob.blocks) {
        for (float f : b.data) {
            append_f32_le(out, f);
        }
    }
    return out;
}

BlobFile decode_blob(std::string_view bytes) {
    require(bytes.size() >= kMagic.size() + 8 && bytes.substr(0, kMagic.size()) == kMagic, ErrorKind::kParse,
            "not a crossfind blob file (bad magic)");
    const std::uint64_t header_len = read_u64_le(bytes.substr(kMagic.size(), 8));
    const std::size_t header_at = kMagic.size() + 8;
    require(header_len <= bytes.size() - header_at, ErrorKind::kParse, "blob header truncated");

    BlobFile blob;
    try {
        blob.header = Json::parse(bytes.substr(header_at, header_len));
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::kParse, std::string("blob header is not valid JSON: ") + e.what());
    }
    require(blob.header.value("byte_order", "") == "little", ErrorKind::kParse,
            "unsupported byte order in blob header");
    require(blob.header.contains("blocks") && blob.header["blocks"].is_array(), ErrorKind::kParse,
            "blob header lacks a block list");

    std::size_t offset = header_at + header_len;
    for (const auto& entry : blob.header["blocks"]) {
        BlobBlock b;
        b.name = entry.at("name").get<std::string>();
        b.shape = entry.at("shape").get<std::vector<std::size_t>>();
        const std::size_t n = element_count(b.shape);
        require(n <= (bytes.size() - offset) / 4, ErrorKind::kParse, "block '" + b.name + "' truncated");
        b.data.resize(n);
        const char* p = bytes.data() + offset;
        for (std::size_t i = 0; i < n; ++i) {
            b.data[i] = read_f32_le(p + 4 * i);
        }
        offset += 4 * n;
        blob.blocks.push_back(std::move(b));
    }
    require(offset == bytes.size(), ErrorKind::kParse, "trailing bytes after last blob block");
    blob.header.erase("blocks");
    blob.header.erase("byte_order");
    return blob;
}

void write_blob(const std::filesystem::path& path, const BlobFile& blob) {
    write_file_atomic(path, encode_blob(blob));
}

BlobFile read_blob(const std::filesystem::path& path) {
    try {
        return decode_blob(read_file(path));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::kParse) {
            fail(ErrorKind::kParse, path.string() + ": " + e.what());
        }
        throw;
    }
}

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kInvalidArgument:
            return "invalid_argument";
        case ErrorKind::kParse:
            return "parse_error";
        case ErrorKind::kNotFound:
            return "not_found";
        case ErrorKind::kNotLabeled:
            return "not_labeled";
        case ErrorKind::kBackend:
            return "backend_error";
        case ErrorKind::kPrerequisite:
            return "prerequisite_missing";
        case ErrorKind::kNumeric:
            return "numeric_error";
        case ErrorKind::kIo:
            return "io_error";
    }
    return "unknown";
}

std::string join_ids(const std::vector<std::string>& ids, std::size_t limit) {
    std::string out;
    for (std::size_t i = 0; i < ids.size() && i < limit; ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += ids[i];
    }
    if (ids.size() > limit) {
        out += ", ... (" + std::to_string(ids.size() - limit) + " more)";
    }
    return out;
}

}  // namespace crossfind
