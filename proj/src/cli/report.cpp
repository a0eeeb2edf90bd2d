#include "hardylab/cli/report.hpp"

#include "hardylab/core.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace hardylab::cli {
namespace {

// Quotes a CSV field when it contains a delimiter, quote or newline.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path);
  return out;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void Report::add(std::string case_name, std::string parameter, std::string quantity,
                 double value, std::optional<double> error, std::string status) {
  rows_.push_back({experiment_, std::move(case_name), std::move(parameter), std::move(quantity),
                   value, error, std::move(status)});
}

void Report::check(std::string case_name, std::string parameter, std::string quantity,
                   double value, std::optional<double> error, bool ok) {
  add(std::move(case_name), std::move(parameter), std::move(quantity), value, error,
      ok ? "pass" : "fail");
}

bool Report::all_pass() const {
  for (const ReportRow& r : rows_) {
    if (r.status == "fail") return false;
  }
  return true;
}

std::vector<std::string> Report::failures() const {
  std::vector<std::string> out;
  for (const ReportRow& r : rows_) {
    if (r.status == "fail") {
      out.push_back(r.case_name + (r.parameter.empty() ? "" : "[" + r.parameter + "]") + " " +
                    r.quantity + " = " + format_number(r.value));
    }
  }
  return out;
}

std::string Report::csv_body() const {
  std::ostringstream os;
  os << "experiment,case,parameter,quantity,value,error,status\n";
  for (const ReportRow& r : rows_) {
    os << csv_field(r.experiment) << ',' << csv_field(r.case_name) << ','
       << csv_field(r.parameter) << ',' << csv_field(r.quantity) << ','
       << format_number(r.value) << ',' << (r.error ? format_number(*r.error) : "exact") << ','
       << r.status << '\n';
  }
  return os.str();
}

void Report::write_csv(const std::string& path, const std::string& timestamp,
                       double wall_s) const {
  std::ofstream out = open_output(path);
  out << "# hardylab " << experiment_ << " generated " << timestamp
      << " wall_time_s=" << format_number(wall_s) << '\n'
      << csv_body();
}

void Report::write_json(const std::string& path, const std::string& timestamp,
                        double wall_s) const {
  nlohmann::ordered_json j;
  j["experiment"] = experiment_;
  j["generated"] = timestamp;
  j["wall_time_s"] = wall_s;
  j["status"] = all_pass() ? "pass" : "fail";
  j["rows"] = rows_.size();
  j["failures"] = failures();
  j["summary"] = summary_;
  std::ofstream out = open_output(path);
  out << j.dump(2) << '\n';
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace hardylab::cli
