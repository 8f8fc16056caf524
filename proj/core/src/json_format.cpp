#include "extctrl/json_format.hpp"

#include <cmath>
#include <cstdio>

namespace extctrl {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void newline(std::string& out, int indent, int depth) {
  if (indent < 0) return;
  out += '\n';
  out.append(static_cast<std::size_t>(indent * depth), ' ');
}

void write(const nlohmann::json& j, std::string& out, int indent, int depth) {
  using value_t = nlohmann::json::value_t;
  switch (j.type()) {
    case value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map keeps keys sorted
        if (!first) out += ',';
        first = false;
        newline(out, indent, depth + 1);
        out += nlohmann::json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        write(it.value(), out, indent, depth + 1);
      }
      newline(out, indent, depth);
      out += '}';
      return;
    }
    case value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ',';
        first = false;
        newline(out, indent, depth + 1);
        write(v, out, indent, depth + 1);
      }
      newline(out, indent, depth);
      out += ']';
      return;
    }
    case value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      std::string s = format_double(v);
      if (s.find_first_of(".eE") == std::string::npos) s += ".0";
      out += s;
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const nlohmann::json& j, int indent) {
  std::string out;
  write(j, out, indent, 0);
  return out;
}

}  // namespace extctrl
