#pragma once

// Check records and their JSON / CSV rendering. Reports contain no wall-clock data unless
// timings are requested, so equal inputs give byte-identical output.

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace pnr {

enum class Status { Pass, Fail, Skipped, Info };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Pass: return "pass";
    case Status::Fail: return "fail";
    case Status::Skipped: return "skipped";
    case Status::Info: return "info";
  }
  return "?";
}

struct Record {
  std::string name;
  std::string identity;  // what is being measured, in words
  Status status = Status::Info;
  double max_residual = 0.0;
  double tolerance = 0.0;
  int samples = 0;
  std::uint64_t seed = 0;
  double runtime_ms = 0.0;
  std::string note;
  nlohmann::json detail;  // optional table (sweeps, pencils)
};

class Report {
 public:
  explicit Report(std::string command = {}) : command_(std::move(command)) {}

  /// Adds a thresholded record: pass iff max_residual ≤ tolerance (NaN fails).
  Record& check(std::string name, std::string identity, double residual, double tolerance, int samples,
                std::uint64_t seed) {
    Record r;
    r.name = std::move(name);
    r.identity = std::move(identity);
    r.max_residual = residual;
    r.tolerance = tolerance;
    r.samples = samples;
    r.seed = seed;
    r.status = residual <= tolerance ? Status::Pass : Status::Fail;
    records_.push_back(std::move(r));
    return records_.back();
  }

  Record& skipped(std::string name, std::string identity, std::string why) {
    Record r;
    r.name = std::move(name);
    r.identity = std::move(identity);
    r.status = Status::Skipped;
    r.note = std::move(why);
    records_.push_back(std::move(r));
    return records_.back();
  }

  Record& info(std::string name, std::string identity, nlohmann::json detail = {}) {
    Record r;
    r.name = std::move(name);
    r.identity = std::move(identity);
    r.status = Status::Info;
    r.detail = std::move(detail);
    records_.push_back(std::move(r));
    return records_.back();
  }

  Record& failed(std::string name, std::string identity, std::string why) {
    Record r;
    r.name = std::move(name);
    r.identity = std::move(identity);
    r.status = Status::Fail;
    r.max_residual = std::numeric_limits<double>::infinity();
    r.note = std::move(why);
    records_.push_back(std::move(r));
    return records_.back();
  }

  bool passed() const {
    return std::none_of(records_.begin(), records_.end(), [](const Record& r) { return r.status == Status::Fail; });
  }

  const std::vector<Record>& records() const { return records_; }
  std::vector<Record>& records() { return records_; }
  const Record* find(const std::string& name) const {
    for (const Record& r : records_)
      if (r.name == name) return &r;
    return nullptr;
  }

  /// Records sorted by name (stable, so equal names keep insertion order).
  std::vector<Record> sorted() const {
    std::vector<Record> out = records_;
    std::stable_sort(out.begin(), out.end(), [](const Record& a, const Record& b) { return a.name < b.name; });
    return out;
  }

  nlohmann::json to_json(bool timings = false) const {
    using json = nlohmann::json;
    json checks = json::array();
    for (const Record& r : sorted()) {
      json j;
      j["name"] = r.name;
      j["identity"] = r.identity;
      j["status"] = to_string(r.status);
      j["max_residual"] = finite_or_string(r.max_residual);
      j["tolerance"] = r.tolerance;
      j["samples"] = r.samples;
      j["seed"] = r.seed;
      if (!r.note.empty()) j["note"] = r.note;
      if (!r.detail.is_null()) j["detail"] = r.detail;
      if (timings) j["runtime_ms"] = r.runtime_ms;
      checks.push_back(std::move(j));
    }
    json out;
    out["command"] = command_;
    out["checks"] = std::move(checks);
    out["verdict"] = passed() ? "pass" : "fail";
    return out;
  }

  std::string json_text(bool timings = false) const { return to_json(timings).dump(2) + "\n"; }

  std::string csv_text() const {
    std::string out = "name,status,max_residual,tolerance,samples,seed\n";
    char buf[96];
    for (const Record& r : sorted()) {
      out += r.name + "," + to_string(r.status) + ",";
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%llu\n", r.max_residual, r.tolerance, r.samples,
                    static_cast<unsigned long long>(r.seed));
      out += buf;
    }
    return out;
  }

 private:
  static nlohmann::json finite_or_string(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  }

  std::string command_;
  std::vector<Record> records_;
};

/// Measures the wall time of f() into the last record it creates.
template <class Fn>
void timed(Report& report, Fn&& f) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t before = report.records().size();
  f();
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  auto& recs = report.records();
  for (std::size_t i = before; i < recs.size(); ++i) recs[i].runtime_ms = ms;
}

}  // namespace pnr
