#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sft/errors.hpp"
#include "sft/rational.hpp"

namespace chainlab {

using json = nlohmann::json;

inline constexpr const char* kReportSchema = "sft-chainlab-report/1";

enum class Status { Pass, Fail, Info };

inline const char* status_name(Status s) { return s == Status::Pass ? "PASS" : s == Status::Fail ? "FAIL" : "INFO"; }

struct Line {
  std::string id;
  Status status = Status::Info;
  std::string subject;
  std::string detail;
  json witness;
};

// Everything one subject (a table, a tree, a module) contributes to the report.
struct Section {
  std::string subject;
  std::vector<Line> lines;
  json data = json::object();

  void pass(const std::string& id, const std::string& detail) { lines.push_back({id, Status::Pass, subject, detail, {}}); }
  void info(const std::string& id, const std::string& detail) { lines.push_back({id, Status::Info, subject, detail, {}}); }
  void fail(const std::string& id, const std::string& detail, json witness = {}) {
    lines.push_back({id, Status::Fail, subject, detail, std::move(witness)});
  }
  void check(bool ok, const std::string& id, const std::string& detail, json witness = {}) {
    if (ok) pass(id, detail);
    else fail(id, detail, std::move(witness));
  }
};

struct Task {
  std::string id;  // check id charged with an unexpected library error
  std::string subject;
  std::function<void(Section&)> run;
};

// Runs the tasks on at most `jobs` threads; sections come back in task order whatever the schedule.
inline std::vector<Section> run_tasks(const std::vector<Task>& tasks, int jobs) {
  std::vector<Section> out(tasks.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < tasks.size(); i = next++) {
      Section& s = out[i];
      s.subject = tasks[i].subject;
      try {
        tasks[i].run(s);
      } catch (const sft::Error& e) {
        s.fail(tasks[i].id, e.what());
      }
    }
  };
  int n = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  if (n == 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

struct Report {
  std::string command;
  std::string input;
  std::vector<Section> sections;
  std::vector<Line> extra;  // parse errors and the like, not tied to a subject

  std::vector<const Line*> lines() const {
    std::vector<const Line*> r;
    for (auto& l : extra) r.push_back(&l);
    for (auto& s : sections)
      for (auto& l : s.lines) r.push_back(&l);
    return r;
  }
  size_t failures() const {
    size_t f = 0;
    for (auto* l : lines()) f += l->status == Status::Fail;
    return f;
  }
  size_t checks() const {
    size_t c = 0;
    for (auto* l : lines()) c += l->status != Status::Info;
    return c;
  }

  std::string text(int exit_code) const {
    std::ostringstream os;
    for (auto* l : lines()) {
      os << l->id << ' ' << status_name(l->status) << ' ' << l->subject;
      if (!l->detail.empty()) os << ": " << l->detail;
      os << '\n';
    }
    os << "cli.summary " << (exit_code == 0 ? "PASS" : "FAIL") << ' ' << command << ": " << checks() << " checks, "
       << failures() << " failed, exit " << exit_code << '\n';
    return os.str();
  }

  json sidecar(int exit_code) const {
    json j;
    j["schema"] = kReportSchema;
    j["command"] = command;
    j["input"] = input;
    j["exit_code"] = exit_code;
    j["ok"] = exit_code == 0;
    j["checks"] = json::array();
    for (auto* l : lines()) {
      json c = {{"id", l->id}, {"status", status_name(l->status)}, {"subject", l->subject}, {"detail", l->detail}};
      if (!l->witness.is_null()) c["witness"] = l->witness;
      j["checks"].push_back(c);
    }
    j["results"] = json::object();
    for (auto& s : sections)
      if (!s.data.empty()) j["results"][s.subject] = s.data;
    return j;
  }
};

inline std::string str(const sft::Rational& r) { return sft::to_string(r); }

template <class Map>
std::string histogram(const Map& m) {
  std::string s = "{";
  for (auto& [k, v] : m) s += (s.size() > 1 ? ", " : "") + std::to_string(k) + ":" + std::to_string(v);
  return s + "}";
}

template <class Map>
json histogram_json(const Map& m) {
  json j = json::object();
  for (auto& [k, v] : m) j[std::to_string(k)] = v;
  return j;
}

}  // namespace chainlab
