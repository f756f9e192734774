#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hpm/error.hpp"

namespace hpm {

// Shortest round-trip formatting; keeps file outputs byte-stable and reloads
// bit-exact.
inline std::string fmt_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

inline std::string fmt_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::optional<double> parse_double(std::string_view s) {
  // strip surrounding spaces
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_int(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline double require_double(std::string_view s, const std::string& what) {
  auto v = parse_double(s);
  if (!v) fail(Errc::schema, "cannot parse " + what + " from '" + std::string(s) + "'");
  return *v;
}

inline long long require_int(std::string_view s, const std::string& what) {
  auto v = parse_int(s);
  if (!v) fail(Errc::schema, "cannot parse " + what + " from '" + std::string(s) + "'");
  return *v;
}

// Streaming reader for comma-delimited UTF-8 files with a header row.
// Handles quoted fields (embedded commas, quotes, newlines) and CRLF.
class CsvReader {
 public:
  explicit CsvReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) fail(Errc::io, "missing input file: " + path);
    if (!read_record(header_)) fail(Errc::schema, "empty CSV file: " + path);
    for (std::size_t i = 0; i < header_.size(); ++i) index_[header_[i]] = i;
  }

  const std::vector<std::string>& header() const { return header_; }
  const std::string& path() const { return path_; }

  bool has_column(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t column(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) fail(Errc::schema, "missing column '" + name + "' in " + path_);
    return it->second;
  }

  // Reads the next data record. Returns false at EOF. row_number() gives the
  // 0-based data-row index of the record just read.
  bool next(std::vector<std::string>& fields) {
    if (!read_record(fields)) return false;
    ++row_;
    return true;
  }

  std::size_t row_number() const { return row_ - 1; }

 private:
  bool read_record(std::vector<std::string>& fields) {
    fields.clear();
    int c = in_.get();
    if (c == EOF) return false;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (;;) {
      if (c == EOF) {
        fields.push_back(std::move(field));
        return true;
      }
      char ch = static_cast<char>(c);
      if (quoted) {
        if (ch == '"') {
          int n = in_.get();
          if (n == '"') {
            field.push_back('"');
          } else {
            quoted = false;
            c = n;
            continue;
          }
        } else {
          field.push_back(ch);
        }
      } else if (ch == '"' && field.empty() && !any) {
        quoted = true;
        any = true;
      } else if (ch == ',') {
        fields.push_back(std::move(field));
        field.clear();
        any = false;
      } else if (ch == '\n') {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        fields.push_back(std::move(field));
        return true;
      } else {
        field.push_back(ch);
        any = true;
      }
      c = in_.get();
    }
  }

  std::ifstream in_;
  std::string path_;
  std::vector<std::string> header_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t row_ = 0;
};

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) fail(Errc::io, "cannot open output file: " + path);
  }

  void write_row(std::span<const std::string> fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      write_field(fields[i]);
    }
    out_ << '\n';
  }

  void write_row(std::initializer_list<std::string> fields) {
    write_row(std::span<const std::string>(fields.begin(), fields.size()));
  }

  void flush() { out_.flush(); }

 private:
  void write_field(const std::string& f) {
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      out_ << f;
      return;
    }
    out_ << '"';
    for (char c : f) {
      if (c == '"') out_ << "\"\"";
      else out_ << c;
    }
    out_ << '"';
  }

  std::ofstream out_;
  std::string path_;
};

}  // namespace hpm
