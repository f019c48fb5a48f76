// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "clickagent/types.hpp"

namespace clickagent {

inline constexpr const char* kTraceSchemaVersion = "1";

/// SHA-256 of a byte string, lowercase hex.
std::string sha256_hex(const std::string& bytes);

enum class TraceErrorKind { SchemaVersionMismatch, MalformedRecord };

class TraceError : public std::runtime_error {
public:
    TraceError(TraceErrorKind kind, int line, const std::string& what)
        : std::runtime_error(what), kind_(kind), line_(line) {}
    TraceErrorKind kind() const { return kind_; }
    int line() const { return line_; }

private:
    TraceErrorKind kind_;
    int line_;
};

/// JSON Lines body plus the observation payloads it references by digest.
struct SerializedTrace {
    std::string jsonl;
    std::map<std::string, std::string> blobs; // sha256 hex -> bytes
    // blob key -> format tag, for the obs/<digest>.<tag> file naming
    std::map<std::string, std::string> blob_formats;
};

/// Byte-deterministic: the same trace always serializes to identical bytes.
SerializedTrace serialize_trace(const EpisodeTrace& t);

EpisodeTrace deserialize_trace(const std::string& jsonl,
                               const std::map<std::string, std::string>& blobs);

/// Writes trace.jsonl plus obs/<sha256>.<format_tag> payload files into dir.
std::filesystem::path write_trace(const EpisodeTrace& t,
                                  const std::filesystem::path& dir);

/// Reads a trace directory (or a trace.jsonl path) written by write_trace.
EpisodeTrace read_trace(const std::filesystem::path& path);

} // namespace clickagent
