#ifndef WPT_CSV_HPP_
#define WPT_CSV_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace wpt {

struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Reads a comma separated file with a header row and numeric cells.
// Throws ValidationError with the offending line number on malformed input.
NumericTable read_numeric_csv(const std::string& path);

// Shortest round-tripping decimal representation, '.' separator.
std::string format_number(double value);

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);

  CsvWriter& cell(double value);
  CsvWriter& cell(long long value);
  CsvWriter& cell(int value) { return cell(static_cast<long long>(value)); }
  CsvWriter& cell(const std::string& value);
  void end_row();

 private:
  void separator();

  std::ostream& out_;
  bool first_in_row_ = true;
};

}  // namespace wpt

#endif  // WPT_CSV_HPP_
