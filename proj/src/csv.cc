/* Copyright 2026 The Rafiki Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "rafiki/csv.h"

#include <charconv>
#include <fstream>

#include "absl/strings/str_cat.h"

namespace rafiki {

std::string CsvField(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string CsvRow(const std::vector<std::string>& fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    out += CsvField(fields[i]);
  }
  out += "\r\n";
  return out;
}

std::string CsvNumber(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

absl::Status CsvTable::AddRow(std::vector<std::string> row) {
  if (row.size() != header_.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("row has ", row.size(), " fields, header has ", header_.size()));
  }
  rows_.push_back(std::move(row));
  return absl::OkStatus();
}

std::string CsvTable::ToString() const {
  std::string out = CsvRow(header_);
  for (const auto& r : rows_) out += CsvRow(r);
  return out;
}

absl::Status CsvTable::Write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) return absl::InternalError(absl::StrCat("cannot write ", path));
  out << ToString();
  return out ? absl::OkStatus() : absl::InternalError(absl::StrCat("write failed: ", path));
}

absl::StatusOr<std::vector<std::vector<std::string>>> ParseCsv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, in_quotes = false, any = false;
  size_t i = 0;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    quoted = false;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        in_quotes = false;
      } else {
        field += c;
      }
      ++i;
      continue;
    }
    any = true;
    if (c == '"') {
      if (!field.empty() || quoted) {
        return absl::InvalidArgumentError(absl::StrCat("stray quote at offset ", i));
      }
      in_quotes = quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' || c == '\n') {
      end_field();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      if (quoted) return absl::InvalidArgumentError(absl::StrCat("text after quote at ", i));
      field += c;
    }
    ++i;
  }
  if (in_quotes) return absl::InvalidArgumentError("unterminated quoted field");
  if (any || !field.empty() || !row.empty()) {
    end_field();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace rafiki
