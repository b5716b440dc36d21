#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "facildyn.h"

namespace fdcli {

/// Bad flags or config; exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A failed library call, carrying its status.
struct ApiError : std::runtime_error {
  ApiError(fdyn_status s, const std::string& msg) : std::runtime_error(msg), status(s) {}
  fdyn_status status;
};

/// Throws ApiError with the thread's last error message unless s is FDYN_OK.
void check(fdyn_status s);

/// "start:stop:count" (inclusive), "a,b,c", or a single number.
[[nodiscard]] std::vector<double> parse_grid(const std::string& spec, const std::string& what);

/// Shortest round-trip-safe text: %.17g, "nan", "inf", "-inf".
[[nodiscard]] std::string fmt(double v);

[[nodiscard]] std::uint64_t fnv1a64(std::string_view data);
[[nodiscard]] std::string hex64(std::uint64_t v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row);
  [[nodiscard]] std::size_t rows() const noexcept { return rows_.size(); }
  [[nodiscard]] std::string render(const std::string& config_hash) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes to a sibling temporary file, then renames over path.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Samples merged with events in time order: t,x,y,event[,mode].
[[nodiscard]] CsvTable trajectory_table(const fdyn_trajectory* t, bool with_mode);

}  // namespace fdcli
