#pragma once

#include <map>

#include "pfgl/types.hpp"

namespace pfgl {

// Flat-sectioned key-value text: `[section]` headers, `key = value` lines,
// `#` or `;` comments. Keys are addressed as "section.key".
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_string(const std::string& text);

  // `--override section.key=value`
  void override_entry(const std::string& assignment);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& dflt) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double dflt) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;

  // keys of one section, insertion-ordered
  std::vector<std::string> section_keys(const std::string& section) const;

  // resolved sorted dump for the run manifest
  std::string dump() const;

 private:
  std::map<std::string, std::string> entries_;
  std::vector<std::string> order_;
};

}  // namespace pfgl
