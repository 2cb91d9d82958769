#include "toml_lite.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "tvcov/errors.hpp"

namespace tvcov::toml_lite {

using nlohmann::json;

namespace {

[[noreturn]] void parse_error(int line, const std::string& msg) {
  fail(ErrorCode::ConfigError, "toml line " + std::to_string(line) + ": " + msg);
}

bool bare_key_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

class ValueParser {
 public:
  ValueParser(const std::string& text, int line) : s_(text), line_(line) {}

  json parse_all() {
    json v = value();
    skip_ws();
    if (pos_ != s_.size()) parse_error(line_, "unexpected text after value: '" + s_.substr(pos_) + "'");
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  json value() {
    skip_ws();
    if (pos_ >= s_.size()) parse_error(line_, "missing value");
    const char c = s_[pos_];
    if (c == '"') return string();
    if (c == '[') return array();
    if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      return false;
    }
    return number();
  }

  json string() {
    std::string out;
    for (++pos_; pos_ < s_.size(); ++pos_) {
      const char c = s_[pos_];
      if (c == '"') {
        ++pos_;
        return out;
      }
      if (c != '\\') {
        out += c;
        continue;
      }
      if (++pos_ >= s_.size()) break;
      switch (s_[pos_]) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: parse_error(line_, std::string("unsupported escape \\") + s_[pos_]);
      }
    }
    parse_error(line_, "unterminated string");
  }

  json array() {
    json arr = json::array();
    ++pos_;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return arr;
    }
    while (true) {
      arr.push_back(value());
      skip_ws();
      if (pos_ >= s_.size()) parse_error(line_, "unterminated array");
      if (s_[pos_] == ']') {
        ++pos_;
        return arr;
      }
      if (s_[pos_] != ',') parse_error(line_, "expected ',' or ']' in array");
      ++pos_;
      skip_ws();
      // Trailing comma.
      if (pos_ < s_.size() && s_[pos_] == ']') {
        ++pos_;
        return arr;
      }
    }
  }

  json number() {
    std::size_t end = pos_;
    while (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '.' ||
                               s_[end] == '+' || s_[end] == '-' || s_[end] == '_')) {
      ++end;
    }
    std::string tok = s_.substr(pos_, end - pos_);
    std::erase(tok, '_');
    if (tok.empty()) parse_error(line_, "expected a value");
    if (tok.front() == '+') tok.erase(0, 1);
    const bool is_float = tok.find_first_of(".eE") != std::string::npos;
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    if (is_float) {
      double d = 0.0;
      auto [p, ec] = std::from_chars(b, e, d);
      if (ec != std::errc() || p != e) parse_error(line_, "bad number '" + tok + "'");
      pos_ = end;
      return d;
    }
    std::int64_t i = 0;
    auto [p, ec] = std::from_chars(b, e, i);
    pos_ = end;
    if (ec == std::errc() && p == e) return i;
    // Unsigned values beyond the signed range, such as large seeds.
    std::uint64_t u = 0;
    auto [pu, ecu] = std::from_chars(b, e, u);
    if (ecu != std::errc() || pu != e) parse_error(line_, "bad value '" + tok + "'");
    return u;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_;
};

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '\\' && in_string) {
      ++i;
    } else if (c == '"') {
      in_string = !in_string;
    } else if (c == '#' && !in_string) {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Bracket depth outside strings; multi-line arrays continue until it is zero.
int bracket_balance(const std::string& s) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && in_string) {
      ++i;
    } else if (s[i] == '"') {
      in_string = !in_string;
    } else if (!in_string && s[i] == '[') {
      ++depth;
    } else if (!in_string && s[i] == ']') {
      --depth;
    }
  }
  return depth;
}

void check_key(const std::string& key, int line) {
  if (key.empty() || !std::all_of(key.begin(), key.end(), bare_key_char)) {
    parse_error(line, "invalid key '" + key + "'");
  }
}

std::string format_double(double d) {
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), d);
  std::string s(buf.data(), p);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string format_scalar(const json& v) {
  switch (v.type()) {
    case json::value_t::string: return v.dump();
    case json::value_t::boolean: return v.get<bool>() ? "true" : "false";
    case json::value_t::number_integer: return std::to_string(v.get<std::int64_t>());
    case json::value_t::number_unsigned: return std::to_string(v.get<std::uint64_t>());
    case json::value_t::number_float: {
      const double d = v.get<double>();
      if (!std::isfinite(d)) fail(ErrorCode::ConfigError, "toml output cannot hold non-finite numbers");
      return format_double(d);
    }
    case json::value_t::array: {
      std::string out = "[";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i].is_object()) fail(ErrorCode::ConfigError, "toml output does not support arrays of tables");
        out += (i ? ", " : "") + format_scalar(v[i]);
      }
      return out + "]";
    }
    default: fail(ErrorCode::ConfigError, "value cannot be written as toml");
  }
}

void dump_table(const json& obj, const std::string& prefix, std::ostringstream& os) {
  for (const auto& [key, v] : obj.items()) {
    if (!v.is_object()) os << key << " = " << format_scalar(v) << "\n";
  }
  for (const auto& [key, v] : obj.items()) {
    if (!v.is_object()) continue;
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    os << "\n[" << name << "]\n";
    dump_table(v, name, os);
  }
}

}  // namespace

json parse(const std::string& text) {
  json doc = json::object();
  json* table = &doc;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const int start_line = line_no;

    if (line.front() == '[') {
      if (line.size() > 1 && line[1] == '[') parse_error(line_no, "arrays of tables are not supported");
      if (line.back() != ']') parse_error(line_no, "unterminated table header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      table = &doc;
      std::size_t from = 0;
      while (true) {
        const auto dot = name.find('.', from);
        const std::string part = trim(name.substr(from, dot == std::string::npos ? std::string::npos : dot - from));
        check_key(part, line_no);
        json& next = (*table)[part];
        if (next.is_null()) next = json::object();
        if (!next.is_object()) parse_error(line_no, "'" + part + "' is already a value");
        table = &next;
        if (dot == std::string::npos) break;
        from = dot + 1;
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) parse_error(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    check_key(key, line_no);
    std::string value = trim(line.substr(eq + 1));
    while (bracket_balance(value) > 0) {
      if (!std::getline(in, raw)) parse_error(start_line, "unterminated array");
      ++line_no;
      value += " " + trim(strip_comment(raw));
    }
    if (table->contains(key)) parse_error(start_line, "duplicate key '" + key + "'");
    (*table)[key] = ValueParser(value, start_line).parse_all();
  }
  return doc;
}

std::string dump(const json& doc) {
  if (!doc.is_object()) fail(ErrorCode::ConfigError, "toml documents must be tables");
  std::ostringstream os;
  dump_table(doc, "", os);
  return os.str();
}

}  // namespace tvcov::toml_lite
