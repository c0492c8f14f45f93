#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "sumrank/errors.hpp"

namespace sumrank {

using json = nlohmann::ordered_json;

/// FNV-1a, 64 bit. Used for request digests and provider fingerprints.
inline std::uint64_t fnv1a64(std::string_view data,
                             std::uint64_t seed = 14695981039346656037ull) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

/// One parsed line of a JSONL file, with its 1-based line number.
struct JsonlRecord {
  std::size_t line;
  json value;
};

/// Reads a line-delimited JSON file. Blank lines are skipped; a line that is
/// not a JSON object raises IoError naming the line.
inline std::vector<JsonlRecord> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::vector<JsonlRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json value = json::parse(line, nullptr, false);
    if (value.is_discarded() || !value.is_object()) {
      throw IoError(path + ":" + std::to_string(line_no) +
                    ": line is not a JSON object");
    }
    records.push_back({line_no, std::move(value)});
  }
  return records;
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open file for writing: " + path);
  }

  void write(const json& value) {
    out_ << value.dump() << '\n';
    if (!out_) throw IoError("write failed: " + path_);
  }

  void flush() { out_.flush(); }

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace sumrank
