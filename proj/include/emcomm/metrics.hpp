#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace emcomm::harness {

// One evaluation record. `budget` is the bandwidth budget in message
// dimensions; accuracies are greedy-action rates on the evaluation set.
struct MetricsRow {
  std::int64_t step = 0;
  std::string variant;
  std::uint64_t seed = 0;
  int budget = 0;
  double class_accuracy = 0.0;
  double level_accuracy = 0.0;
  double mean_reward = 0.0;
  double mean_kl = 0.0;
  double effective_dim = 0.0;
  std::int64_t flops_per_decision = 0;
};

inline const char* metrics_header() {
  return "step,variant,seed,budget,class_accuracy,level_accuracy,mean_reward,mean_kl,"
         "effective_dim,flops_per_decision";
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline void check_row(const MetricsRow& row) {
  const double vals[] = {row.class_accuracy, row.level_accuracy, row.mean_reward, row.mean_kl,
                         row.effective_dim};
  for (double v : vals)
    if (!std::isfinite(v)) throw std::runtime_error("metrics: refusing to persist non-finite value");
  if (row.class_accuracy < 0.0 || row.class_accuracy > 1.0 || row.level_accuracy < 0.0 ||
      row.level_accuracy > 1.0)
    throw std::runtime_error("metrics: accuracy out of [0, 1]");
  if (row.mean_kl < 0.0) throw std::runtime_error("metrics: negative mean_kl");
}

inline std::string to_csv(const MetricsRow& row) {
  check_row(row);
  std::ostringstream os;
  os << row.step << ',' << row.variant << ',' << row.seed << ',' << row.budget << ','
     << format_double(row.class_accuracy) << ',' << format_double(row.level_accuracy) << ','
     << format_double(row.mean_reward) << ',' << format_double(row.mean_kl) << ','
     << format_double(row.effective_dim) << ',' << row.flops_per_decision;
  return os.str();
}

inline MetricsRow row_from_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  if (fields.size() != 10) throw std::runtime_error("metrics: malformed row: " + line);
  MetricsRow row;
  row.step = std::stoll(fields[0]);
  row.variant = fields[1];
  row.seed = std::stoull(fields[2]);
  row.budget = std::stoi(fields[3]);
  row.class_accuracy = std::stod(fields[4]);
  row.level_accuracy = std::stod(fields[5]);
  row.mean_reward = std::stod(fields[6]);
  row.mean_kl = std::stod(fields[7]);
  row.effective_dim = std::stod(fields[8]);
  row.flops_per_decision = std::stoll(fields[9]);
  return row;
}

inline void write_metrics_csv(const std::vector<MetricsRow>& rows, std::ostream& os) {
  os << metrics_header() << '\n';
  for (const auto& row : rows) os << to_csv(row) << '\n';
}

inline std::vector<MetricsRow> read_metrics_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != metrics_header())
    throw std::runtime_error("metrics: missing or unexpected header");
  std::vector<MetricsRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    rows.push_back(row_from_csv(line));
  }
  return rows;
}

}  // namespace emcomm::harness
