#include "pfgl/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace pfgl {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
  std::string out;
  for (char ch : line) {
    if (ch == '#' || ch == ';') break;
    out.push_back(ch);
  }
  return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']', "config line ", lineno, ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      require(!section.empty(), "config line ", lineno, ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, "config line ", lineno, ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), "config line ", lineno, ": empty key");
    require(!section.empty(), "config line ", lineno, ": key outside any [section]");
    const std::string full = section + "." + key;
    if (!cfg.entries_.count(full)) cfg.order_.push_back(full);
    cfg.entries_[full] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "cannot open config file '", path, "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return from_string(ss.str());
}

void KeyValueConfig::override_entry(const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos, "override '", assignment, "': expected key=value");
  const std::string key = trim(assignment.substr(0, eq));
  require(key.find('.') != std::string::npos, "override key '", key,
          "' must be section.key");
  if (!entries_.count(key)) order_.push_back(key);
  entries_[key] = trim(assignment.substr(eq + 1));
}

std::string KeyValueConfig::get_string(const std::string& key) const {
  auto it = entries_.find(key);
  require(it != entries_.end(), "config: missing required key '", key, "'");
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& dflt) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? dflt : it->second;
}

double KeyValueConfig::get_double(const std::string& key) const {
  const std::string s = get_string(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    require(trim(s.substr(used)).empty(), "");
    return v;
  } catch (...) {
    fail("config: key '", key, "' = '", s, "' is not a number");
  }
}

double KeyValueConfig::get_double(const std::string& key, double dflt) const {
  return has(key) ? get_double(key) : dflt;
}

int KeyValueConfig::get_int(const std::string& key) const {
  const double v = get_double(key);
  const int i = static_cast<int>(std::llround(v));
  require(std::abs(v - i) < 1e-12, "config: key '", key, "' must be an integer");
  return i;
}

int KeyValueConfig::get_int(const std::string& key, int dflt) const {
  return has(key) ? get_int(key) : dflt;
}

bool KeyValueConfig::get_bool(const std::string& key, bool dflt) const {
  if (!has(key)) return dflt;
  std::string s = get_string(key);
  std::transform(s.begin(), s.end(), s.begin(), ::tolower);
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  fail("config: key '", key, "' = '", s, "' is not a boolean");
}

std::vector<std::string> KeyValueConfig::section_keys(const std::string& section) const {
  std::vector<std::string> out;
  const std::string prefix = section + ".";
  for (const auto& k : order_)
    if (k.rfind(prefix, 0) == 0) out.push_back(k);
  return out;
}

std::string KeyValueConfig::dump() const {
  std::ostringstream os;
  for (const auto& [k, v] : entries_) os << k << " = " << v << "\n";
  return os.str();
}

}  // namespace pfgl
