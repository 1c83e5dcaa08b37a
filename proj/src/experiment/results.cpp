#include "cofuse/experiment/results.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cofuse::experiment {

using nlohmann::json;

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  // Avoid "-0.0000" for tiny negatives.
  if (std::string(buf) == "-0.0000") return "0.0000";
  return buf;
}

namespace {

double parse_value(const std::string& s) {
  if (s == "nan") return std::nan("");
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error("bad number '" + s + "'");
  return v;
}

// 4-decimal value as a JSON number, so the JSON and CSV files agree.
json json_value(double v) {
  if (std::isnan(v)) return nullptr;
  return json::parse(format_value(v));
}

void require_rows(const std::vector<ResultsRow>& rows) {
  if (rows.empty()) throw std::runtime_error("no results rows to write");
}

}  // namespace

void write_csv(std::ostream& os, const std::vector<ResultsRow>& rows) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.variant << ',' << r.seed << ',' << format_value(r.p) << ',' << format_value(r.adr) << ','
       << format_value(r.eir) << ',' << format_value(r.ps_kb) << ',' << r.epochs << ','
       << format_value(r.wall_seconds) << '\n';
  }
}

void write_json(std::ostream& os, const std::vector<ResultsRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"variant", r.variant},
                   {"seed", r.seed},
                   {"p", json_value(r.p)},
                   {"adr", json_value(r.adr)},
                   {"eir", json_value(r.eir)},
                   {"ps_kb", json_value(r.ps_kb)},
                   {"epochs", r.epochs},
                   {"wall_seconds", json_value(r.wall_seconds)}});
  }
  os << arr.dump(2) << '\n';
}

std::vector<ResultsRow> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw std::runtime_error("results csv: unexpected header");
  std::vector<ResultsRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) {
      throw std::runtime_error("results csv line " + std::to_string(lineno) + ": expected 8 fields");
    }
    try {
      rows.push_back({cells[0], std::stoull(cells[1]), parse_value(cells[2]), parse_value(cells[3]),
                      parse_value(cells[4]), parse_value(cells[5]), std::stoull(cells[6]),
                      parse_value(cells[7])});
    } catch (const std::exception& e) {
      throw std::runtime_error("results csv line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<ResultsRow> read_json(std::istream& is) {
  const json arr = json::parse(is);
  auto num = [](const json& v) { return v.is_null() ? std::nan("") : v.get<double>(); };
  std::vector<ResultsRow> rows;
  for (const auto& o : arr) {
    rows.push_back({o.at("variant").get<std::string>(), o.at("seed").get<std::uint64_t>(), num(o.at("p")),
                    num(o.at("adr")), num(o.at("eir")), num(o.at("ps_kb")), o.at("epochs").get<std::size_t>(),
                    num(o.at("wall_seconds"))});
  }
  return rows;
}

void emit_csv(const std::filesystem::path& path, const std::vector<ResultsRow>& rows) {
  require_rows(rows);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  write_csv(out, rows);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void emit_json(const std::filesystem::path& path, const std::vector<ResultsRow>& rows) {
  require_rows(rows);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  write_json(out, rows);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace cofuse::experiment
