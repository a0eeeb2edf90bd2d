#pragma once

// Long-format CSV tables and JSON summaries.
//
// CSV columns: experiment,case,parameter,quantity,value,error,status
// The first line is a "#" comment with the timestamp and wall time; everything
// after it depends only on the config and seed.

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace hardylab::cli {

struct ReportRow {
  std::string experiment;
  std::string case_name;
  std::string parameter;
  std::string quantity;
  double value = 0.0;
  std::optional<double> error;  // empty: exact
  std::string status;           // pass, fail, info, skipped
};

/// %.17g; nan and inf spelled out.
std::string format_number(double x);

class Report {
 public:
  explicit Report(std::string experiment) : experiment_(std::move(experiment)) {}

  void add(std::string case_name, std::string parameter, std::string quantity, double value,
           std::optional<double> error, std::string status);
  /// Row whose status is pass/fail from `ok`.
  void check(std::string case_name, std::string parameter, std::string quantity, double value,
             std::optional<double> error, bool ok);

  const std::vector<ReportRow>& rows() const { return rows_; }
  bool all_pass() const;
  std::vector<std::string> failures() const;

  nlohmann::ordered_json& summary() { return summary_; }

  std::string csv_body() const;
  void write_csv(const std::string& path, const std::string& timestamp, double wall_s) const;
  void write_json(const std::string& path, const std::string& timestamp, double wall_s) const;

 private:
  std::string experiment_;
  std::vector<ReportRow> rows_;
  nlohmann::ordered_json summary_ = nlohmann::ordered_json::object();
};

/// UTC time in ISO 8601.
std::string utc_timestamp();

}  // namespace hardylab::cli
