#pragma once

// Minimal TOML subset, enough for simulator configs: [table] headers, dotted
// keys flattened to "table.key", strings with the common escapes, integers,
// floats, booleans, and flat homogeneous arrays. Anything fancier (dates,
// inline tables, arrays of tables, multiline strings) is rejected loudly.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pofl/errors.hpp"

namespace pofl {

struct TomlValue {
  enum class Type { Str, Int, Float, Bool, Array };
  Type type = Type::Int;
  std::string s;
  long long i = 0;
  double f = 0;
  bool b = false;
  std::vector<TomlValue> arr;

  double as_double() const {
    if (type == Type::Float) return f;
    if (type == Type::Int) return static_cast<double>(i);
    throw InvalidArgument("toml: value is not numeric");
  }
};

class TomlTable {
 public:
  static TomlTable parse(const std::string& text) {
    TomlTable t;
    std::istringstream in(text);
    std::string line, prefix;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = strip_comment(line, lineno);
      s = trim(s);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.size() < 3 || s.back() != ']' || s[1] == '[')
          fail(lineno, "malformed table header");
        prefix = trim(s.substr(1, s.size() - 2));
        if (prefix.empty()) fail(lineno, "empty table name");
        continue;
      }
      std::size_t eq = s.find('=');
      if (eq == std::string::npos) fail(lineno, "expected key = value");
      std::string key = trim(s.substr(0, eq));
      std::string val = trim(s.substr(eq + 1));
      if (key.empty() || val.empty()) fail(lineno, "empty key or value");
      std::string full = prefix.empty() ? key : prefix + "." + key;
      if (t.values_.count(full)) fail(lineno, "duplicate key '" + full + "'");
      t.values_[full] = parse_value(val, lineno);
    }
    return t;
  }

  static TomlTable parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("toml: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const TomlValue& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw InvalidArgument("toml: missing key '" + key + "'");
    return it->second;
  }

  double get_double(const std::string& key) const { return get(key).as_double(); }
  double get_double(const std::string& key, double dflt) const {
    return has(key) ? get_double(key) : dflt;
  }

  long long get_int(const std::string& key) const {
    const TomlValue& v = get(key);
    if (v.type != TomlValue::Type::Int) throw InvalidArgument("toml: '" + key + "' is not an int");
    return v.i;
  }
  long long get_int(const std::string& key, long long dflt) const {
    return has(key) ? get_int(key) : dflt;
  }

  bool get_bool(const std::string& key) const {
    const TomlValue& v = get(key);
    if (v.type != TomlValue::Type::Bool) throw InvalidArgument("toml: '" + key + "' is not a bool");
    return v.b;
  }
  bool get_bool(const std::string& key, bool dflt) const {
    return has(key) ? get_bool(key) : dflt;
  }

  std::string get_string(const std::string& key) const {
    const TomlValue& v = get(key);
    if (v.type != TomlValue::Type::Str)
      throw InvalidArgument("toml: '" + key + "' is not a string");
    return v.s;
  }
  std::string get_string(const std::string& key, const std::string& dflt) const {
    return has(key) ? get_string(key) : dflt;
  }

  std::vector<double> get_double_array(const std::string& key) const {
    const TomlValue& v = get(key);
    if (v.type != TomlValue::Type::Array)
      throw InvalidArgument("toml: '" + key + "' is not an array");
    std::vector<double> out;
    for (const TomlValue& e : v.arr) out.push_back(e.as_double());
    return out;
  }

  const std::map<std::string, TomlValue>& entries() const { return values_; }

 private:
  [[noreturn]] static void fail(int lineno, const std::string& msg) {
    throw InvalidArgument("toml: line " + std::to_string(lineno) + ": " + msg);
  }

  static std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  // Cut at the first '#' that is not inside a quoted string.
  static std::string strip_comment(const std::string& line, int lineno) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      char c = line[i];
      if (in_str) {
        if (c == '\\') {
          ++i;
        } else if (c == '"') {
          in_str = false;
        }
      } else if (c == '"') {
        in_str = true;
      } else if (c == '#') {
        return line.substr(0, i);
      }
    }
    if (in_str) fail(lineno, "unterminated string");
    return line;
  }

  static TomlValue parse_value(const std::string& raw, int lineno) {
    TomlValue v;
    if (raw.front() == '"') {
      if (raw.size() < 2 || raw.back() != '"') fail(lineno, "unterminated string");
      v.type = TomlValue::Type::Str;
      for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
        char c = raw[i];
        if (c != '\\') {
          v.s.push_back(c);
          continue;
        }
        if (i + 1 >= raw.size() - 1) fail(lineno, "dangling escape");
        char e = raw[++i];
        switch (e) {
          case 'n': v.s.push_back('\n'); break;
          case 't': v.s.push_back('\t'); break;
          case 'r': v.s.push_back('\r'); break;
          case '"': v.s.push_back('"'); break;
          case '\\': v.s.push_back('\\'); break;
          default: fail(lineno, "unsupported escape");
        }
      }
      return v;
    }
    if (raw == "true" || raw == "false") {
      v.type = TomlValue::Type::Bool;
      v.b = raw == "true";
      return v;
    }
    if (raw.front() == '[') {
      if (raw.back() != ']') fail(lineno, "unterminated array");
      v.type = TomlValue::Type::Array;
      std::string body = trim(raw.substr(1, raw.size() - 2));
      if (body.empty()) return v;
      std::size_t start = 0;
      bool in_str = false;
      for (std::size_t i = 0; i <= body.size(); ++i) {
        if (i < body.size() && body[i] == '"') in_str = !in_str;
        if (i == body.size() || (body[i] == ',' && !in_str)) {
          std::string item = trim(body.substr(start, i - start));
          if (item.empty()) fail(lineno, "empty array element");
          v.arr.push_back(parse_value(item, lineno));
          start = i + 1;
        }
      }
      for (std::size_t i = 1; i < v.arr.size(); ++i)
        if (v.arr[i].type != v.arr[0].type &&
            !(v.arr[i].type == TomlValue::Type::Float && v.arr[0].type == TomlValue::Type::Int) &&
            !(v.arr[i].type == TomlValue::Type::Int && v.arr[0].type == TomlValue::Type::Float))
          fail(lineno, "mixed array element types");
      return v;
    }
    // Number: int unless it has '.', 'e' or 'E'.
    bool is_float = raw.find_first_of(".eE") != std::string::npos;
    std::size_t used = 0;
    try {
      if (is_float) {
        v.type = TomlValue::Type::Float;
        v.f = std::stod(raw, &used);
      } else {
        v.type = TomlValue::Type::Int;
        v.i = std::stoll(raw, &used);
      }
    } catch (const std::logic_error&) {
      fail(lineno, "cannot parse value '" + raw + "'");
    }
    if (used != raw.size()) fail(lineno, "trailing characters after number");
    return v;
  }

  std::map<std::string, TomlValue> values_;
};

}  // namespace pofl
