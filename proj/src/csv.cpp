#include "oaudit/csv.hpp"

#include <sstream>

#include "oaudit/errors.hpp"

namespace oaudit {

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

std::string read_whole_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(errc::io, "read failure on " + path.string());
  return std::move(buf).str();
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  const std::string text = read_whole_file(path);

  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  std::size_t row_number = 1;  // 1-based, header included

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    if (table.header.empty()) {
      table.header = std::move(record);
    } else {
      if (record.size() != table.header.size()) {
        fail(errc::parse, path.filename().string() + " row " + std::to_string(row_number) +
                              ": expected " + std::to_string(table.header.size()) +
                              " fields, got " + std::to_string(record.size()));
      }
      table.rows.push_back(std::move(record));
    }
    record.clear();
    ++row_number;
  };

  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field.push_back(c);
        ++i;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          fail(errc::parse, path.filename().string() + " row " + std::to_string(row_number) +
                                ": stray quote inside unquoted field");
        }
        in_quotes = true;
        field_was_quoted = true;
        ++i;
        break;
      case ',':
        end_field();
        ++i;
        break;
      case '\r':
        if (i + 1 < n && text[i + 1] == '\n') {
          end_record();
          i += 2;
        } else {
          field.push_back(c);
          ++i;
        }
        break;
      case '\n':
        end_record();
        ++i;
        break;
      default:
        field.push_back(c);
        ++i;
        break;
    }
  }
  if (in_quotes) {
    fail(errc::parse, path.filename().string() + " row " + std::to_string(row_number) +
                          ": unterminated quoted field");
  }
  // Final record without trailing newline.
  if (!field.empty() || field_was_quoted || !record.empty()) end_record();

  if (table.header.empty()) fail(errc::parse, path.filename().string() + ": empty file, header required");
  return table;
}

std::string csv_escape(const std::string& field) {
  bool needs_quote = false;
  for (char c : field) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r') {
      needs_quote = true;
      break;
    }
  }
  if (!needs_quote) return field;
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
  if (!out_) fail(errc::io, "cannot open " + path.string() + " for writing");
}

void CsvWriter::write_row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_.put(',');
    out_ << csv_escape(fields[i]);
  }
  out_.put('\n');
  if (!out_) fail(errc::io, "write failure on " + path_.string());
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) fail(errc::io, "close failure on " + path_.string());
}

}  // namespace oaudit
