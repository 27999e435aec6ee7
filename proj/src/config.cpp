#include "ervc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "ervc/error.hpp"

namespace ervc {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"seed", "0", "global seed"},
      {"threads", "1", "worker cap; 1 is bit-reproducible"},
      {"synth.sets", "10", "complete sets to generate"},
      {"synth.side", "250", "phantom side in pixels"},
      {"synth.marker_prob", "0.193", "side marker probability"},
      {"synth.redact_prob", "0.262", "redaction probability"},
      {"synth.asymmetry", "0.05", "left-side widening"},
      {"synth.noise", "0.02", "noise sigma, fraction of full scale"},
      {"split.train", "", "training sets (default: 116/198 of all sets)"},
      {"split.val", "", "validation sets"},
      {"split.test", "", "test sets"},
      {"preprocess.side", "250", "output side after downsampling"},
      {"model.stage_blocks", "1,1,1", "residual blocks per stage"},
      {"model.base_channels", "8", "channels of the first stage"},
      {"model.input_side", "64", "network input side"},
      {"model.input_channels", "1", "network input channels"},
      {"model.source_side", "", "images are resampled to this side (default ceil(input_side*250/224))"},
      {"train.epochs", "40", "epochs"},
      {"train.batch_size", "32", "mini-batch size"},
      {"train.lr", "0.01", "learning rate"},
      {"train.momentum", "0.9", "momentum"},
      {"train.augment", "1", "augment training batches"},
      {"augment.zoom_lo", "0.9", "zoom range low"},
      {"augment.zoom_hi", "1.1", "zoom range high"},
      {"augment.hist_points", "3", "histogram shift control points"},
      {"augment.hist_mag", "0.1", "histogram shift magnitude"},
      {"cam.count", "8", "overlays to render"},
      {"stats.yates", "1", "Yates continuity correction for the 2x2 tests"},
  };
  return keys;
}

namespace {

const ConfigKey* find_key(std::string_view name) {
  for (const auto& k : config_keys())
    if (k.name == name) return &k;
  return nullptr;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::set(std::string_view key, std::string value) {
  if (!find_key(key)) fail(Errc::BadConfig, "unknown key '" + std::string(key) + "'");
  values_[std::string(key)] = std::move(value);
}

void RunConfig::load_ini(std::string_view text) {
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    const auto comment = line.find_first_of("#;");
    line = trim(line.substr(0, comment));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(Errc::BadConfig, "line " + std::to_string(line_no) + ": bad section");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(Errc::BadConfig, "line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = (section.empty() ? "" : section + ".") + std::string(trim(line.substr(0, eq)));
    set(key, std::string(trim(line.substr(eq + 1))));
  }
}

std::string RunConfig::get(std::string_view key) const {
  const ConfigKey* k = find_key(key);
  if (!k) fail(Errc::BadConfig, "unknown key '" + std::string(key) + "'");
  const auto it = values_.find(std::string(key));
  return it != values_.end() ? it->second : std::string(k->default_value);
}

std::uint64_t RunConfig::get_u64(std::string_view key) const {
  const std::string v = get(key);
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty())
    fail(Errc::BadConfig, std::string(key) + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

double RunConfig::get_double(std::string_view key) const {
  const std::string v = get(key);
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty() || !std::isfinite(out))
    fail(Errc::BadConfig, std::string(key) + ": expected a number, got '" + v + "'");
  return out;
}

bool RunConfig::get_bool(std::string_view key) const {
  std::string v = get(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  fail(Errc::BadConfig, std::string(key) + ": expected a boolean, got '" + v + "'");
}

std::vector<std::size_t> RunConfig::get_size_list(std::string_view key) const {
  const std::string v = get(key);
  std::vector<std::size_t> out;
  std::string_view rest = v;
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view item = trim(rest.substr(0, comma));
    std::size_t x = 0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
    if (item.empty() || ec != std::errc{} || p != item.data() + item.size())
      fail(Errc::BadConfig, std::string(key) + ": expected a comma separated integer list, got '" + v + "'");
    out.push_back(x);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& k : config_keys()) out += std::string(k.name) + " = " + get(k.name) + "\n";
  return out;
}

}  // namespace ervc
