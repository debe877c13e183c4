// SPDX-License-Identifier: Apache-2.0
//
// Deterministic CSV / JSON artifacts and theory-point configs.
#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dmft/activations.hpp"
#include "dmft/mft.hpp"

namespace dmft {

using json = nlohmann::ordered_json;

/// Shortest text that round-trips the double; non-finite values print as inf / -inf / nan.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// JSON number, or the strings "inf" / "-inf" / "nan" for non-finite values.
inline json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

using CsvCell = std::variant<double, long, std::string>;

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> meta;  // emitted as "# key = value"
  std::vector<std::string> header;
  std::vector<std::vector<CsvCell>> rows;

  std::string str() const {
    std::ostringstream os;
    for (const auto& [k, v] : meta) os << "# " << k << " = " << v << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) os << ",";
        std::visit(
            [&](const auto& v) {
              using T = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<T, double>) {
                os << format_number(v);
              } else {
                os << v;
              }
            },
            row[i]);
      }
      os << "\n";
    }
    return os.str();
  }
};

/// Resolves a relative output path against $DMFT_OUTPUT_DIR when it is set.
inline std::filesystem::path resolve_output(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("DMFT_OUTPUT_DIR"); dir != nullptr && *dir != '\0') {
      return std::filesystem::path(dir) / p;
    }
  }
  return p;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  require(!out.fail(), ErrorKind::io, "failed writing '" + path.string() + "'");
}

inline std::string read_text(const std::filesystem::path& path) {
  require(std::filesystem::exists(path), ErrorKind::missing_input, "input '" + path.string() + "' does not exist");
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string json_text(const json& j) { return j.dump(2) + "\n"; }

inline json read_json(const std::filesystem::path& path) {
  const auto text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_argument, "malformed JSON in '" + path.string() + "': " + e.what());
  }
}

/// Theory point {activation, sigma_w_sq, sigma_b_sq, rho}; unknown keys are rejected.
inline ChannelParams theory_point_from_json(const json& j) {
  require(j.is_object(), ErrorKind::invalid_argument, "theory point must be a JSON object");
  static const std::set<std::string> known{"activation", "sigma_w_sq", "sigma_b_sq", "rho"};
  for (const auto& [k, v] : j.items()) {
    require(known.count(k) == 1, ErrorKind::invalid_argument, "unknown key '" + k + "' in theory point");
  }
  require(j.contains("activation") && j["activation"].is_string(), ErrorKind::invalid_argument,
          "theory point needs a string 'activation'");
  require(j.contains("sigma_w_sq") && j["sigma_w_sq"].is_number(), ErrorKind::invalid_argument,
          "theory point needs a numeric 'sigma_w_sq'");
  auto number = [&](const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    require(j[key].is_number(), ErrorKind::invalid_argument, std::string("'") + key + "' must be a number");
    return j[key].get<double>();
  };
  ChannelParams p{j["sigma_w_sq"].get<double>(), number("sigma_b_sq", 0.0), number("rho", 1.0),
                  find_activation(j["activation"].get<std::string>())};
  p.validate();
  return p;
}

inline json theory_point_to_json(const ChannelParams& p) {
  json j;
  j["activation"] = p.activation.name;
  j["sigma_w_sq"] = p.sigma_w_sq;
  j["sigma_b_sq"] = p.sigma_b_sq;
  j["rho"] = p.rho;
  return j;
}

}  // namespace dmft
