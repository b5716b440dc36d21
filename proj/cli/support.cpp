#include "support.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace fdcli {

void check(fdyn_status s) {
  if (s != FDYN_OK) throw ApiError(s, fdyn_last_error());
}

namespace {

double parse_number(const std::string& text, const std::string& what) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
    throw UsageError(what + ": '" + text + "' is not a finite number");
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec, const std::string& what) {
  if (spec.empty()) throw UsageError(what + ": empty grid");
  if (spec.find(':') != std::string::npos) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3) throw UsageError(what + ": expected start:stop:count, got '" + spec + "'");
    const double a = parse_number(parts[0], what);
    const double b = parse_number(parts[1], what);
    const double c = parse_number(parts[2], what);
    if (c < 1.0 || c != std::floor(c) || c > 1e7) throw UsageError(what + ": count must be a positive integer");
    const auto n = static_cast<std::size_t>(c);
    if (n == 1) return {a};
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    g.back() = b;
    return g;
  }
  std::vector<double> g;
  for (const auto& p : split(spec, ',')) g.push_back(parse_number(p, what));
  return g;
}

std::string fmt(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void CsvTable::add(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw std::logic_error("CSV row width does not match the header");
  rows_.push_back(std::move(row));
}

std::string CsvTable::render(const std::string& config_hash) const {
  std::string out = "# config-hash: " + config_hash + "\n";
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ApiError(FDYN_ERR_IO, "cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw ApiError(FDYN_ERR_IO, "write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ApiError(FDYN_ERR_IO, "cannot rename into " + path.string());
  }
}

CsvTable trajectory_table(const fdyn_trajectory* t, bool with_mode) {
  std::vector<std::string> header{"t", "x", "y", "event"};
  if (with_mode) header.emplace_back("mode");
  CsvTable table(header);
  const std::size_t n = fdyn_trajectory_size(t), ne = fdyn_trajectory_event_count(t);
  std::size_t k = 0;
  int last_mode = -1;
  auto add_event = [&](std::size_t j) {
    double te, x, y;
    const char* kind = nullptr;
    check(fdyn_trajectory_event(t, j, &te, &x, &y, &kind));
    std::vector<std::string> row{fmt(te), fmt(x), fmt(y), kind};
    if (with_mode) row.push_back(std::to_string(last_mode));
    table.add(std::move(row));
  };
  for (std::size_t i = 0; i < n; ++i) {
    double ti, x, y;
    int mode;
    check(fdyn_trajectory_point(t, i, &ti, &x, &y, &mode));
    while (k < ne) {
      double te;
      check(fdyn_trajectory_event(t, k, &te, nullptr, nullptr, nullptr));
      if (te >= ti) break;
      add_event(k++);
    }
    last_mode = mode;
    std::vector<std::string> row{fmt(ti), fmt(x), fmt(y), ""};
    if (with_mode) row.push_back(std::to_string(mode));
    table.add(std::move(row));
  }
  while (k < ne) add_event(k++);
  return table;
}

}  // namespace fdcli
