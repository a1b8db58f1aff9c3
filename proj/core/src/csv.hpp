#pragma once

// Minimal comma-separated helpers shared by the CSV readers. No quoting: every
// format in this project is plain numbers and identifiers.

#include <charconv>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "contina/error.hpp"

namespace contina::csv {

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return fields;
}

[[noreturn]] inline void fail(const std::string& file, std::size_t line, const std::string& what) {
  throw Error(ErrorCategory::kInvalidInput, file + ":" + std::to_string(line) + ": " + what);
}

inline double to_double(std::string_view text, const std::string& file, std::size_t line,
                        std::string_view column) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) {
    fail(file, line, "column '" + std::string(column) + "' is not a number: '" + std::string(text) + "'");
  }
  return v;
}

inline std::int64_t to_int(std::string_view text, const std::string& file, std::size_t line,
                           std::string_view column) {
  std::int64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) {
    fail(file, line, "column '" + std::string(column) + "' is not an integer: '" + std::string(text) + "'");
  }
  return v;
}

inline void expect_header(std::string_view header, std::string_view expected, const std::string& file) {
  std::string h(header);
  while (!h.empty() && (h.back() == '\r' || h.back() == ' ')) h.pop_back();
  if (h.rfind("\xEF\xBB\xBF", 0) == 0) h.erase(0, 3);
  if (h != expected) {
    fail(file, 1, "expected header '" + std::string(expected) + "', got '" + h + "'");
  }
}

// Hours since 1970-01-01T00 for "YYYY-MM-DD HH[:MM[:SS]]" (or with 'T').
inline std::int64_t parse_timestamp(std::string_view text, const std::string& file, std::size_t line) {
  auto fail = [&] { contina::csv::fail(file, line, "malformed timestamp '" + std::string(text) + "'"); };
  if (text.size() < 13 || text[4] != '-' || text[7] != '-' || (text[10] != ' ' && text[10] != 'T')) fail();
  const auto num = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, v);
    if (ec != std::errc() || ptr != text.data() + pos + len) fail();
    return v;
  };
  const int year = num(0, 4);
  const int month = num(5, 2);
  const int day = num(8, 2);
  const int hour = num(11, 2);
  int minute = 0;
  int second = 0;
  if (text.size() >= 16) {
    if (text[13] != ':') fail();
    minute = num(14, 2);
  }
  if (text.size() >= 19) {
    if (text[16] != ':') fail();
    second = num(17, 2);
  }
  if (text.size() != 13 && text.size() != 16 && text.size() != 19) fail();
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                                        std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23) fail();
  if (minute != 0 || second != 0) contina::csv::fail(file, line, "timestamps must fall on whole hours");
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 24 + hour;
}

struct HourStamp {
  std::int64_t t = 0;
  bool dated = false;
};

// Integer hour index, or a calendar timestamp converted to hours since epoch.
inline HourStamp to_hour(std::string_view text, const std::string& file, std::size_t line) {
  if (text.find('-', 1) != std::string_view::npos) return {parse_timestamp(text, file, line), true};
  return {to_int(text, file, line, "t"), false};
}

}  // namespace contina::csv
