// SPDX-License-Identifier: Apache-2.0

#ifndef RANGEKIT_IO_HPP
#define RANGEKIT_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rangekit/core.hpp"

namespace rangekit {
namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path);
  return bytes;
}

inline void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failure on " + path);
}

inline std::uint32_t le_u32(const std::uint8_t* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_le_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

inline float le_f32(const std::uint8_t* b) { return std::bit_cast<float>(le_u32(b)); }

inline void put_le_f32(std::vector<std::uint8_t>& out, float v) {
  put_le_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace detail

// Point scans: packed little-endian float32 quadruples (x, y, z, intensity).
inline PointCloud read_scan(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  if (bytes.size() % 16 != 0) {
    throw FormatError("scan " + path + ": length " + std::to_string(bytes.size()) +
                      " not divisible by 16 (residue " + std::to_string(bytes.size() % 16) + ")");
  }
  PointCloud cloud;
  cloud.points.resize(bytes.size() / 16);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const std::uint8_t* rec = bytes.data() + i * 16;
    Point& p = cloud.points[i];
    p.x = detail::le_f32(rec);
    p.y = detail::le_f32(rec + 4);
    p.z = detail::le_f32(rec + 8);
    p.intensity = detail::le_f32(rec + 12);
    p.existence = 1;
  }
  return cloud;
}

inline void write_scan(const std::string& path, const PointCloud& cloud) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(cloud.size() * 16);
  for (const Point& p : cloud.points) {
    detail::put_le_f32(bytes, static_cast<float>(p.x));
    detail::put_le_f32(bytes, static_cast<float>(p.y));
    detail::put_le_f32(bytes, static_cast<float>(p.z));
    detail::put_le_f32(bytes, static_cast<float>(p.intensity));
  }
  detail::write_file_bytes(path, bytes);
}

// Label streams: one little-endian uint32 per point, semantic class in the
// low 16 bits, instance id in the high 16.
struct LabelStream {
  std::vector<std::int32_t> semantics;
  std::vector<std::int32_t> instances;
};

// Reads a label stream whose length is taken from the file itself.
inline LabelStream read_labels(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  if (bytes.size() % 4 != 0) {
    throw FormatError("labels " + path + ": length " + std::to_string(bytes.size()) +
                      " not divisible by 4 (residue " + std::to_string(bytes.size() % 4) + ")");
  }
  const std::size_t n = bytes.size() / 4;
  LabelStream out;
  out.semantics.resize(n);
  out.instances.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t v = detail::le_u32(bytes.data() + i * 4);
    out.semantics[i] = static_cast<std::int32_t>(v & 0xFFFFu);
    out.instances[i] = static_cast<std::int32_t>(v >> 16);
  }
  return out;
}

// Reads a label stream that must pair with a scan of expected_n points.
inline LabelStream read_labels(const std::string& path, std::size_t expected_n) {
  LabelStream out = read_labels(path);
  if (out.semantics.size() != expected_n) {
    throw FormatError("labels " + path + ": " + std::to_string(out.semantics.size()) +
                      " entries, expected " + std::to_string(expected_n));
  }
  return out;
}

inline void write_labels(const std::string& path, const std::vector<std::int32_t>& semantics,
                         const std::vector<std::int32_t>& instances) {
  if (instances.size() != semantics.size()) {
    throw Error("write_labels: semantic/instance length mismatch");
  }
  std::vector<std::uint8_t> bytes;
  bytes.reserve(semantics.size() * 4);
  for (std::size_t i = 0; i < semantics.size(); ++i) {
    const std::int32_t sem = semantics[i];
    const std::int32_t inst = instances[i];
    if (sem < 0 || sem > 0xFFFF) throw Error("write_labels: semantic id " + std::to_string(sem) + " exceeds 16 bits");
    if (inst < 0 || inst > 0xFFFF) throw Error("write_labels: instance id " + std::to_string(inst) + " exceeds 16 bits");
    detail::put_le_u32(bytes, static_cast<std::uint32_t>(sem) |
                                  (static_cast<std::uint32_t>(inst) << 16));
  }
  detail::write_file_bytes(path, bytes);
}

inline void write_predictions(const std::string& path, const std::vector<std::int32_t>& semantics) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(semantics.size() * 4);
  for (const std::int32_t sem : semantics) {
    if (sem < 0 || sem > 0xFFFF) {
      throw Error("write_predictions: id " + std::to_string(sem) + " exceeds 16 bits");
    }
    detail::put_le_u32(bytes, static_cast<std::uint32_t>(sem));
  }
  detail::write_file_bytes(path, bytes);
}

// key = value text, '#' comments. Shared by the sensor, taxonomy, and
// augmentation config formats plus the view manifest.
inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw FormatError("line " + std::to_string(lineno) + ": expected key = value");
    }
    kv[detail::trim(t.substr(0, eq))] = detail::trim(t.substr(eq + 1));
  }
  return kv;
}

inline std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return parse_key_values(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

namespace detail {

inline double parse_double(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("missing key '" + key + "'");
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(it->second, &used);
  } catch (const std::exception&) {
    throw FormatError("key '" + key + "': not a number: " + it->second);
  }
  if (used != it->second.size()) throw FormatError("key '" + key + "': trailing junk: " + it->second);
  return value;
}

inline std::int64_t parse_int(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("missing key '" + key + "'");
  std::size_t used = 0;
  std::int64_t value = 0;
  try {
    value = std::stoll(it->second, &used);
  } catch (const std::exception&) {
    throw FormatError("key '" + key + "': not an integer: " + it->second);
  }
  if (used != it->second.size()) throw FormatError("key '" + key + "': trailing junk: " + it->second);
  return value;
}

inline std::vector<std::int32_t> parse_id_list(const std::string& text) {
  std::vector<std::int32_t> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    std::size_t used = 0;
    const long v = std::stol(t, &used);
    if (used != t.size()) throw FormatError("bad id list entry: " + t);
    ids.push_back(static_cast<std::int32_t>(v));
  }
  return ids;
}

}  // namespace detail

inline SensorSpec read_sensor_spec(const std::string& path) {
  const auto kv = read_key_values(path);
  try {
    return SensorSpec(detail::parse_double(kv, "fov_up"), detail::parse_double(kv, "fov_down"),
                      static_cast<int>(detail::parse_int(kv, "height")),
                      static_cast<int>(detail::parse_int(kv, "width")));
  } catch (const FormatError& e) {
    throw FormatError("sensor spec " + path + ": " + e.what());
  } catch (const Error& e) {
    throw FormatError("sensor spec " + path + ": " + e.what());
  }
}

inline ClassTaxonomy read_taxonomy(const std::string& path) {
  const auto kv = read_key_values(path);
  try {
    const auto num = static_cast<std::int32_t>(detail::parse_int(kv, "classes"));
    const auto ignore = static_cast<std::int32_t>(detail::parse_int(kv, "ignore"));
    const auto things_it = kv.find("things");
    const auto stuff_it = kv.find("stuff");
    if (things_it == kv.end()) throw FormatError("missing key 'things'");
    if (stuff_it == kv.end()) throw FormatError("missing key 'stuff'");
    std::vector<std::string> names;
    for (std::int32_t id = 0; id < num; ++id) {
      const auto it = kv.find("name." + std::to_string(id));
      names.push_back(it != kv.end() ? it->second : "class-" + std::to_string(id));
    }
    return ClassTaxonomy(num, ignore, detail::parse_id_list(things_it->second),
                         detail::parse_id_list(stuff_it->second), std::move(names));
  } catch (const FormatError& e) {
    throw FormatError("taxonomy " + path + ": " + e.what());
  } catch (const Error& e) {
    throw FormatError("taxonomy " + path + ": " + e.what());
  }
}

}  // namespace rangekit

#endif  // RANGEKIT_IO_HPP
