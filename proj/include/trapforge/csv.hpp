#pragma once

#include <zlib.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "trapforge/errors.hpp"

namespace trapforge::csv {

// RFC 4180: fields containing comma, quote, CR, or LF get quoted, embedded
// quotes doubled.
inline bool needs_quoting(std::string_view field) {
  return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

inline void append_field(std::string& out, std::string_view field) {
  if (!needs_quoting(field)) {
    out.append(field);
    return;
  }
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

inline void append_row(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    append_field(out, fields[i]);
  }
  out.push_back('\n');
}

// Full-text CSV reader; quoted fields may embed commas, quotes, and newlines.
// Returns one vector of fields per record. A trailing newline does not
// produce an empty record.
inline std::vector<std::vector<std::string>> parse(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field.empty() && !field_started) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);  // stray quote inside unquoted field, keep as-is
        }
        break;
      case ',':
        end_field();
        field_started = false;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(c);
        field_started = true;
        break;
    }
  }
  if (in_quotes) throw DataError("CSV ends inside a quoted field");
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

inline bool gzip_path(const std::filesystem::path& path) { return path.extension() == ".gz"; }

// Writes text to path; a .gz suffix selects gzip compression.
inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (gzip_path(path)) {
    gzFile gz = gzopen(path.string().c_str(), "wb");
    if (!gz) throw IoError("cannot open " + path.string() + " for writing");
    if (!text.empty() &&
        gzwrite(gz, text.data(), static_cast<unsigned>(text.size())) !=
            static_cast<int>(text.size())) {
      gzclose(gz);
      throw IoError("short gzip write to " + path.string());
    }
    if (gzclose(gz) != Z_OK) throw IoError("failed to finish gzip stream " + path.string());
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("short write to " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open " + path.string());
  char magic[2] = {0, 0};
  probe.read(magic, 2);
  const bool gz = probe.gcount() == 2 && static_cast<unsigned char>(magic[0]) == 0x1f &&
                  static_cast<unsigned char>(magic[1]) == 0x8b;
  probe.close();

  if (!gz) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }
  gzFile in = gzopen(path.string().c_str(), "rb");
  if (!in) throw IoError("cannot open " + path.string());
  std::string out;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(in, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
  const bool bad = n < 0;
  gzclose(in);
  if (bad) throw IoError("gzip read error in " + path.string());
  return out;
}

}  // namespace trapforge::csv
