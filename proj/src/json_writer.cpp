#include "wavekit/json_writer.hpp"

#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "wavekit/error.hpp"

namespace wavekit {

Json& Json::set(const std::string& key, Json value) {
  auto* obj = std::get_if<Object>(&v_);
  if (!obj) fail(ErrorCode::InvalidArgument, "Json::set on a non-object");
  for (auto& [k, v] : *obj) {
    if (k == key) {
      v = std::move(value);
      return *this;
    }
  }
  obj->emplace_back(key, std::move(value));
  return *this;
}

Json& Json::push(Json value) {
  auto* arr = std::get_if<Array>(&v_);
  if (!arr) fail(ErrorCode::InvalidArgument, "Json::push on a non-array");
  arr->push_back(std::move(value));
  return *this;
}

std::string Json::dump(int indent) const {
  std::string out;
  write(out, indent, 0);
  return out;
}

void Json::write(std::string& out, int indent, int depth) const {
  auto newline = [&](int d) {
    if (indent <= 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::nullptr_t>) {
          out += "null";
        } else if constexpr (std::is_same_v<T, bool>) {
          out += x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(x)) {
            out += "null";
          } else {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", x);
            out += buf;
          }
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          out += std::to_string(x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          out += nlohmann::json(x).dump();
        } else if constexpr (std::is_same_v<T, Array>) {
          if (x.empty()) {
            out += "[]";
            return;
          }
          out += '[';
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) out += ',';
            newline(depth + 1);
            x[i].write(out, indent, depth + 1);
          }
          newline(depth);
          out += ']';
        } else {
          if (x.empty()) {
            out += "{}";
            return;
          }
          out += '{';
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) out += ',';
            newline(depth + 1);
            out += nlohmann::json(x[i].first).dump();
            out += indent > 0 ? ": " : ":";
            x[i].second.write(out, indent, depth + 1);
          }
          newline(depth);
          out += '}';
        }
      },
      v_);
}

} // namespace wavekit
