#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cofuse::experiment {

struct ResultsRow {
  std::string variant;
  std::uint64_t seed = 0;
  double p = 0.0;
  double adr = 0.0;  // NaN when the test set has no hazard frame
  double eir = 0.0;
  double ps_kb = 0.0;
  std::size_t epochs = 0;
  double wall_seconds = 0.0;
};

inline constexpr const char* kCsvHeader = "variant,seed,p,adr,eir,ps_kb,epochs,wall_seconds";

// Fixed-point with four decimals; NaN is written as "nan".
std::string format_value(double v);

void write_csv(std::ostream& os, const std::vector<ResultsRow>& rows);
void write_json(std::ostream& os, const std::vector<ResultsRow>& rows);
std::vector<ResultsRow> read_csv(std::istream& is);
std::vector<ResultsRow> read_json(std::istream& is);

// Writes the file; throws std::runtime_error if rows is empty or the path is
// not writable.
void emit_csv(const std::filesystem::path& path, const std::vector<ResultsRow>& rows);
void emit_json(const std::filesystem::path& path, const std::vector<ResultsRow>& rows);

}  // namespace cofuse::experiment
