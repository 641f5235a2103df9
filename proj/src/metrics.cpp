#include "qvpo/metrics.hpp"

#include <cstdio>
#include <sstream>
#include <string>

#include "qvpo/errors.hpp"

namespace qvpo {

namespace {

const char* kBaseHeader =
    "step,episodes,eval_return_mean,eval_return_std,policy_loss,critic_loss,"
    "mean_positive_weight,zero_weight_fraction";
const char* kCoverageHeader =
    ",mode_coverage_peak1,mode_coverage_peak2,mode_coverage_peak3";

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

MetricsWriter::MetricsWriter(const std::filesystem::path& path,
                             bool with_coverage)
    : path_(path), with_coverage_(with_coverage), out_(path) {
  if (!out_) throw IoError("cannot open metrics file for writing: " + path.string());
  out_ << kBaseHeader;
  if (with_coverage_) out_ << kCoverageHeader;
  out_ << "\n";
  out_.flush();
}

void MetricsWriter::write(const MetricsRow& row) {
  out_ << row.step << ',' << row.episodes << ','
       << format_value(row.eval_return_mean) << ','
       << format_value(row.eval_return_std) << ','
       << format_value(row.policy_loss) << ','
       << format_value(row.critic_loss) << ','
       << format_value(row.mean_positive_weight) << ','
       << format_value(row.zero_weight_fraction);
  if (with_coverage_) {
    if (row.mode_coverage.size() != 3)
      throw IoError("metrics row: expected 3 coverage values");
    for (double c : row.mode_coverage) out_ << ',' << format_value(c);
  }
  out_ << "\n";
  out_.flush();
  if (!out_) throw IoError("failed writing metrics row to " + path_.string());
}

std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics file: " + path.string());
  std::string header;
  if (!std::getline(in, header))
    throw IoError(path.string() + ":1: empty metrics file");
  bool with_coverage = false;
  if (header == std::string(kBaseHeader) + kCoverageHeader)
    with_coverage = true;
  else if (header != kBaseHeader)
    throw IoError(path.string() + ":1: unrecognized metrics header");

  const std::size_t expected_fields = with_coverage ? 11 : 8;
  std::vector<MetricsRow> rows;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    line_no += 1;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != expected_fields)
      throw IoError(path.string() + ":" + std::to_string(line_no) +
                    ": expected " + std::to_string(expected_fields) +
                    " fields, got " + std::to_string(fields.size()));
    auto number = [&](std::size_t i) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(fields[i], &pos);
        if (pos != fields[i].size()) throw std::invalid_argument(fields[i]);
        return v;
      } catch (const std::exception&) {
        throw IoError(path.string() + ":" + std::to_string(line_no) +
                      ": bad numeric field '" + fields[i] + "'");
      }
    };
    MetricsRow row;
    row.step = static_cast<long>(number(0));
    row.episodes = static_cast<long>(number(1));
    row.eval_return_mean = number(2);
    row.eval_return_std = number(3);
    row.policy_loss = number(4);
    row.critic_loss = number(5);
    row.mean_positive_weight = number(6);
    row.zero_weight_fraction = number(7);
    if (with_coverage)
      row.mode_coverage = {number(8), number(9), number(10)};
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace qvpo
