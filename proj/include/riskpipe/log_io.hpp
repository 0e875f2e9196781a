#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "riskpipe/detail/json_util.hpp"
#include "riskpipe/error.hpp"
#include "riskpipe/trajectory.hpp"

namespace riskpipe {

enum class LogFormat { Jsonl, Csv };

inline LogFormat log_format_from_string(const std::string& s) {
  if (s == "jsonl") return LogFormat::Jsonl;
  if (s == "csv") return LogFormat::Csv;
  throw ValidationError("format: expected 'jsonl' or 'csv', got '" + s + "'");
}

namespace detail {

using ojson = nlohmann::ordered_json;

// Shortest round-trip decimal for a double.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double_token(std::string_view tok, std::size_t line) {
  double v = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw ParseError("malformed numeric field '" + std::string(tok) + "'", line);
  if (!std::isfinite(v)) throw ParseError("non-finite numeric field", line);
  return v;
}

inline ojson hardware_to_json(const std::vector<HardwareComponent>& hw) {
  ojson arr = ojson::array();
  for (const auto& c : hw) {
    ojson jc;
    jc["id"] = c.id;
    jc["kind"] = to_string(c.kind);
    if (c.joint_index) jc["joint_index"] = *c.joint_index;
    arr.push_back(std::move(jc));
  }
  return arr;
}

template <class Json>
std::vector<HardwareComponent> hardware_from_json(const Json& arr,
                                                  std::string_view where) {
  if (!arr.is_array())
    throw FormatError(std::string(where) + ": 'components' must be an array");
  std::vector<HardwareComponent> hw;
  for (const auto& jc : arr) {
    if (!jc.is_object())
      throw FormatError(std::string(where) + ": component entry must be an object");
    HardwareComponent c;
    c.id = require_string(jc, "id", where);
    c.kind = component_kind_from_string(require_string(jc, "kind", where));
    if (jc.contains("joint_index")) {
      const auto& ji = jc["joint_index"];
      if (!ji.is_number_integer())
        throw FormatError(std::string(where) + ": 'joint_index' must be an integer");
      c.joint_index = ji.template get<int>();
    }
    hw.push_back(std::move(c));
  }
  return hw;
}

// Wraps the structural checks of TrajectoryLog::validate() into the ingest
// error taxonomy: uniformity/shape problems in a parsed file are format
// errors, not validation errors.
inline void validate_ingested(const TrajectoryLog& log) {
  try {
    log.validate();
  } catch (const ValidationError& e) {
    throw FormatError(e.what());
  }
}

}  // namespace detail

// --- JSONL ------------------------------------------------------------
// First line is the hardware header record; every following line is one
// sample across all joints plus the gripper.

inline std::string serialize_log_jsonl(const TrajectoryLog& log) {
  log.validate();
  std::string out;
  detail::ojson header;
  header["type"] = "hardware";
  header["dt"] = log.dt;
  header["components"] = detail::hardware_to_json(log.hardware);
  out += header.dump();
  out += '\n';
  for (std::size_t k = 0; k < log.sample_count(); ++k) {
    detail::ojson rec;
    rec["t"] = log.gripper[k].t;
    detail::ojson joints = detail::ojson::array();
    for (const auto& series : log.joints) {
      detail::ojson js;
      js["p"] = series[k].position;
      js["v"] = series[k].velocity;
      js["e"] = series[k].effort;
      joints.push_back(std::move(js));
    }
    rec["joints"] = std::move(joints);
    rec["gripper"] = {{"a", log.gripper[k].aperture}, {"f", log.gripper[k].force}};
    out += rec.dump();
    out += '\n';
  }
  return out;
}

inline TrajectoryLog ingest_log_jsonl(std::string_view text) {
  TrajectoryLog log;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  bool have_dt = false;
  std::size_t n_joints = 0;

  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON record: ") + e.what(), line_no);
    }
    if (!j.is_object()) throw ParseError("record must be a JSON object", line_no);

    if (!have_header) {
      if (!j.contains("type") || j["type"] != "hardware")
        throw FormatError("missing hardware header: first record must have type 'hardware'");
      log.hardware = detail::hardware_from_json(
          detail::require_field(j, "components", "hardware header"), "hardware header");
      if (j.contains("dt")) {
        log.dt = detail::require_double(j, "dt", "hardware header");
        have_dt = true;
      }
      have_header = true;
      continue;
    }

    const double t = detail::require_double(j, "t", "sample record");
    const auto& joints = detail::require_field(j, "joints", "sample record");
    if (!joints.is_array())
      throw ParseError("'joints' must be an array", line_no);
    if (log.gripper.empty()) {
      n_joints = joints.size();
      log.joints.assign(n_joints, {});
    } else if (joints.size() != n_joints) {
      throw ParseError("joint count differs from previous records", line_no);
    }
    for (std::size_t jix = 0; jix < n_joints; ++jix) {
      const auto& js = joints[jix];
      if (!js.is_object()) throw ParseError("joint sample must be an object", line_no);
      JointSample s;
      s.t = t;
      s.position = detail::require_double(js, "p", "joint sample");
      s.velocity = detail::require_double(js, "v", "joint sample");
      s.effort = detail::require_double(js, "e", "joint sample");
      log.joints[jix].push_back(s);
    }
    const auto& grip = detail::require_field(j, "gripper", "sample record");
    if (!grip.is_object()) throw ParseError("'gripper' must be an object", line_no);
    GripperSample g;
    g.t = t;
    g.aperture = detail::require_double(grip, "a", "gripper sample");
    g.force = detail::require_double(grip, "f", "gripper sample");
    log.gripper.push_back(g);
  }

  if (!have_header) throw ParseError("empty stream: no records found");
  if (log.gripper.empty()) throw ParseError("stream has a header but no samples");
  if (!have_dt) {
    if (log.gripper.size() < 2)
      throw FormatError("hardware header carries no dt and the log has a single sample");
    log.dt = log.gripper[1].t - log.gripper[0].t;
  }
  detail::validate_ingested(log);
  return log;
}

// --- CSV --------------------------------------------------------------
// Column layout: t,j0_p,j0_v,j0_e,...,grip_a,grip_f. The hardware registry
// travels in a sidecar JSON document ("<name>.hw.json" on disk).

struct CsvLog {
  std::string csv;
  std::string hardware_json;
};

inline CsvLog serialize_log_csv(const TrajectoryLog& log) {
  log.validate();
  CsvLog out;
  std::string& csv = out.csv;
  csv += "t";
  for (std::size_t j = 0; j < log.joint_count(); ++j) {
    const std::string p = "j" + std::to_string(j);
    csv += "," + p + "_p," + p + "_v," + p + "_e";
  }
  csv += ",grip_a,grip_f\n";
  for (std::size_t k = 0; k < log.sample_count(); ++k) {
    csv += detail::format_double(log.gripper[k].t);
    for (const auto& series : log.joints) {
      csv += ',' + detail::format_double(series[k].position);
      csv += ',' + detail::format_double(series[k].velocity);
      csv += ',' + detail::format_double(series[k].effort);
    }
    csv += ',' + detail::format_double(log.gripper[k].aperture);
    csv += ',' + detail::format_double(log.gripper[k].force);
    csv += '\n';
  }
  detail::ojson hw;
  hw["dt"] = log.dt;
  hw["components"] = detail::hardware_to_json(log.hardware);
  out.hardware_json = hw.dump(2) + "\n";
  return out;
}

inline TrajectoryLog ingest_log_csv(std::string_view csv,
                                    std::string_view hardware_json) {
  if (hardware_json.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw FormatError("missing hardware header: empty sidecar document");
  nlohmann::json hw;
  try {
    hw = nlohmann::json::parse(hardware_json);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("hardware sidecar is not valid JSON: ") + e.what());
  }
  if (!hw.is_object() || !hw.contains("components"))
    throw FormatError("missing hardware header: sidecar lacks 'components'");

  TrajectoryLog log;
  log.hardware = detail::hardware_from_json(hw["components"], "hardware sidecar");
  bool have_dt = false;
  if (hw.contains("dt")) {
    log.dt = detail::require_double(hw, "dt", "hardware sidecar");
    have_dt = true;
  }

  auto split = [](std::string_view s, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
      std::size_t c = s.find(',', start);
      if (c == std::string_view::npos) {
        out.push_back(s.substr(start));
        return;
      }
      out.push_back(s.substr(start, c - start));
      start = c + 1;
    }
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::size_t n_joints = 0;
  bool have_head = false;
  std::vector<std::string_view> cells;
  while (pos <= csv.size()) {
    std::size_t nl = csv.find('\n', pos);
    std::string_view line = csv.substr(
        pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? csv.size() + 1 : nl + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty()) continue;

    split(line, cells);
    if (!have_head) {
      if (cells.size() < 3 || cells.front() != "t" || cells.back() != "grip_f" ||
          cells[cells.size() - 2] != "grip_a" || (cells.size() - 3) % 3 != 0)
        throw ParseError("header row must be t,j0_p,j0_v,j0_e,...,grip_a,grip_f", line_no);
      n_joints = (cells.size() - 3) / 3;
      for (std::size_t j = 0; j < n_joints; ++j) {
        const std::string p = "j" + std::to_string(j);
        if (cells[1 + 3 * j] != p + "_p" || cells[2 + 3 * j] != p + "_v" ||
            cells[3 + 3 * j] != p + "_e")
          throw ParseError("unexpected column name '" + std::string(cells[1 + 3 * j]) +
                           "'", line_no);
      }
      log.joints.assign(n_joints, {});
      have_head = true;
      continue;
    }
    if (cells.size() != 3 * n_joints + 3)
      throw ParseError("expected " + std::to_string(3 * n_joints + 3) +
                       " fields, got " + std::to_string(cells.size()), line_no);
    const double t = detail::parse_double_token(cells[0], line_no);
    for (std::size_t j = 0; j < n_joints; ++j) {
      JointSample s;
      s.t = t;
      s.position = detail::parse_double_token(cells[1 + 3 * j], line_no);
      s.velocity = detail::parse_double_token(cells[2 + 3 * j], line_no);
      s.effort = detail::parse_double_token(cells[3 + 3 * j], line_no);
      log.joints[j].push_back(s);
    }
    GripperSample g;
    g.t = t;
    g.aperture = detail::parse_double_token(cells[cells.size() - 2], line_no);
    g.force = detail::parse_double_token(cells[cells.size() - 1], line_no);
    log.gripper.push_back(g);
  }
  if (!have_head) throw ParseError("empty stream: no header row");
  if (log.gripper.empty()) throw ParseError("no data rows after header");
  if (!have_dt) {
    if (log.gripper.size() < 2)
      throw FormatError("hardware sidecar carries no dt and the log has a single sample");
    log.dt = log.gripper[1].t - log.gripper[0].t;
  }
  detail::validate_ingested(log);
  return log;
}

// --- Files ------------------------------------------------------------

inline std::filesystem::path csv_sidecar_path(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension();
  p += ".hw.json";
  return p;
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open for writing: " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw Error("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void save_log(const TrajectoryLog& log, const std::filesystem::path& path,
                     LogFormat format) {
  if (format == LogFormat::Jsonl) {
    write_text_file(path, serialize_log_jsonl(log));
  } else {
    CsvLog out = serialize_log_csv(log);
    write_text_file(path, out.csv);
    write_text_file(csv_sidecar_path(path), out.hardware_json);
  }
}

inline TrajectoryLog load_log(const std::filesystem::path& path, LogFormat format) {
  if (format == LogFormat::Jsonl) return ingest_log_jsonl(read_text_file(path));
  return ingest_log_csv(read_text_file(path), read_text_file(csv_sidecar_path(path)));
}

// --- Ground truth -----------------------------------------------------

inline std::string serialize_ground_truth(const std::vector<SkillLabel>& labels,
                                          double dt) {
  detail::ojson j;
  j["version"] = 1;
  j["dt"] = dt;
  detail::ojson arr = detail::ojson::array();
  for (SkillLabel l : labels) arr.push_back(to_string(l));
  j["labels"] = std::move(arr);
  return j.dump(2) + "\n";
}

inline std::vector<SkillLabel> parse_ground_truth(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid ground-truth JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("version") || j["version"] != 1)
    throw FormatError("ground truth: unknown or missing version");
  const auto& arr = detail::require_field(j, "labels", "ground truth");
  if (!arr.is_array()) throw FormatError("ground truth: 'labels' must be an array");
  std::vector<SkillLabel> labels;
  labels.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_string()) throw FormatError("ground truth: labels must be strings");
    labels.push_back(skill_from_string(v.get<std::string>()));
  }
  return labels;
}

}  // namespace riskpipe
