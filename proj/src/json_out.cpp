#include "kinreg/json_out.hpp"

#include <cmath>
#include <cstdio>

namespace kinreg::json_out {

namespace {

void write(const nlohmann::json& j, int indent, int depth, std::string& out) {
  const auto pad = [&](int d) {
    if (indent > 0) out.append(static_cast<std::size_t>(d * indent), ' ');
  };
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{";
      out += nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) {
          out += ",";
          out += nl;
        }
        first = false;
        pad(depth + 1);
        out += nlohmann::json(it.key()).dump();
        out += indent > 0 ? ": " : ":";
        write(it.value(), indent, depth + 1, out);
      }
      out += nl;
      pad(depth);
      out += "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[";
      out += nl;
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i > 0) {
          out += ",";
          out += nl;
        }
        pad(depth + 1);
        write(j[i], indent, depth + 1, out);
      }
      out += nl;
      pad(depth);
      out += "]";
      return;
    }
    case nlohmann::json::value_t::number_float:
      out += number(j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

}  // namespace

std::string number(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dump(const nlohmann::json& j, int indent) {
  std::string out;
  write(j, indent, 0, out);
  out += "\n";
  return out;
}

}  // namespace kinreg::json_out
