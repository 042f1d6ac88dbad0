#include "panolayout/config.hpp"

#include <charconv>
#include <sstream>

#include "panolayout/errors.hpp"

namespace panolayout {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Drops a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw FormatError("config key '" + key + "' needs a number");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw FormatError("config key '" + key + "' needs an integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw FormatError("config key '" + key + "' needs true or false");
}

}  // namespace

std::map<std::string, std::string> parse_flat_toml(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw FormatError("config line " + std::to_string(line_no) + ": " + why);
    };
    if (line.front() == '[') {
      if (line != "[train]") fail("only the [train] table is supported");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) fail("empty key or value");
    if (value.front() == '"') {
      if (value.size() < 2 || value.back() != '"') fail("unterminated string");
      value = value.substr(1, value.size() - 2);
    }
    out[key] = value;
  }
  return out;
}

TrainConfig train_config_from_toml(const std::string& text, TrainConfig cfg) {
  for (const auto& [key, v] : parse_flat_toml(text)) {
    if (key == "lr") cfg.lr = to_double(key, v);
    else if (key == "batch") cfg.batch = static_cast<int>(to_int(key, v));
    else if (key == "beta1") cfg.beta1 = to_double(key, v);
    else if (key == "beta2") cfg.beta2 = to_double(key, v);
    else if (key == "alpha") cfg.alpha = to_double(key, v);
    else if (key == "beta") cfg.beta = to_double(key, v);
    else if (key == "gamma") cfg.gamma = to_double(key, v);
    else if (key == "dropout") cfg.dropout = to_double(key, v);
    else if (key == "epochs") cfg.epochs = static_cast<int>(to_int(key, v));
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "variant") cfg.variant = parse_variant(v);
    else if (key == "augment") cfg.augment = to_bool(key, v);
    else if (key == "max_steps") cfg.max_steps = static_cast<int>(to_int(key, v));
    else if (key == "time_budget_s") cfg.time_budget_s = to_double(key, v);
    else if (key == "eval_iou") cfg.eval_iou = to_bool(key, v);
    else throw FormatError("unknown config key '" + key + "'");
  }
  validate_train_config(cfg);
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base) {
  const auto bytes = read_file_bytes(path);
  return train_config_from_toml(std::string(bytes.begin(), bytes.end()), base);
}

std::string train_config_to_toml(const TrainConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "[train]\n"
     << "lr = " << cfg.lr << "\n"
     << "batch = " << cfg.batch << "\n"
     << "beta1 = " << cfg.beta1 << "\n"
     << "beta2 = " << cfg.beta2 << "\n"
     << "alpha = " << cfg.alpha << "\n"
     << "beta = " << cfg.beta << "\n"
     << "gamma = " << cfg.gamma << "\n"
     << "dropout = " << cfg.dropout << "\n"
     << "epochs = " << cfg.epochs << "\n"
     << "seed = " << cfg.seed << "\n"
     << "variant = \"" << variant_name(cfg.variant) << "\"\n"
     << "augment = " << (cfg.augment ? "true" : "false") << "\n"
     << "max_steps = " << cfg.max_steps << "\n"
     << "time_budget_s = " << cfg.time_budget_s << "\n"
     << "eval_iou = " << (cfg.eval_iou ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace panolayout
