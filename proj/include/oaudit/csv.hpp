#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace oaudit {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // 0-based position of a header column, or -1.
  int column(const std::string& name) const;
};

// Strict reader: quoted fields with doubled-quote escapes, LF or CRLF line
// endings, every record must have the header's column count. Errors name the
// 1-based file row (header is row 1).
CsvTable read_csv(const std::filesystem::path& path);

std::string csv_escape(const std::string& field);

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);
  void write_row(const std::vector<std::string>& fields);
  void close();

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

}  // namespace oaudit
