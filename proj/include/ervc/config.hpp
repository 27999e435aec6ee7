#pragma once

// INI-style run configuration. "[section]" headers prefix the keys that follow
// ("[train]" + "epochs = 40" is "train.epochs"); '#' and ';' start comments.
// Only documented keys are accepted.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ervc {

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  std::string_view help;
};

const std::vector<ConfigKey>& config_keys();

class RunConfig {
public:
  /// Throws BadConfig on syntax errors and unknown keys.
  void load_ini(std::string_view text);
  void set(std::string_view key, std::string value);

  /// Explicit value or the documented default.
  std::string get(std::string_view key) const;
  bool is_set(std::string_view key) const { return values_.count(std::string(key)) > 0; }

  // Typed accessors; throw BadConfig on malformed values.
  std::uint64_t get_u64(std::string_view key) const;
  std::size_t get_size(std::string_view key) const { return static_cast<std::size_t>(get_u64(key)); }
  double get_double(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<std::size_t> get_size_list(std::string_view key) const;

  /// Every key with its effective value, one "key = value" per line.
  std::string dump() const;

private:
  std::map<std::string, std::string> values_;
};

}  // namespace ervc
