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

// RFC 4180 CSV output: CRLF line ends, fields quoted when they hold a comma,
// quote, CR or LF, quotes doubled.

#ifndef RAFIKI_CSV_H_
#define RAFIKI_CSV_H_

#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace rafiki {

std::string CsvField(std::string_view field);
std::string CsvRow(const std::vector<std::string>& fields);
// Shortest text that reads back as the same double.
std::string CsvNumber(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  // InvalidArgument on a width mismatch.
  absl::Status AddRow(std::vector<std::string> row);
  std::string ToString() const;
  absl::Status Write(const std::string& path) const;

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Parses RFC 4180 text, header row included.
absl::StatusOr<std::vector<std::vector<std::string>>> ParseCsv(std::string_view text);

}  // namespace rafiki

#endif  // RAFIKI_CSV_H_
