#include "lms/config.hpp"

#include "lms/tgl.hpp"

#include <array>
#include <fstream>
#include <sstream>

namespace lms {

namespace {

constexpr std::array<std::pair<Variant, const char*>, 9> kVariantNames{{
    {Variant::full, "full"},
    {Variant::no_egl, "-EGL"},
    {Variant::no_ugl, "-UGL"},
    {Variant::ugl_entirety, "+UGL(Entirety)"},
    {Variant::no_tgl, "-TGL"},
    {Variant::no_time_ugl, "-T(UGL)"},
    {Variant::no_time_decoder, "-T(Decoder)"},
    {Variant::gate_sum, "-GATE+Sum"},
    {Variant::gate_linear, "-GATE+Linear"},
}};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  if (!(in >> out) || !(in >> std::ws).eof())
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': expected boolean, got '" + value + "'");
}

std::string format_double(double v) {
  for (int precision = 15; precision <= 17; ++precision) {
    std::ostringstream out;
    out.precision(precision);
    out << v;
    if (std::stod(out.str()) == v || precision == 17) return out.str();
  }
  return {};
}

}  // namespace

std::string variant_name(Variant v) {
  for (const auto& [variant, name] : kVariantNames)
    if (variant == v) return name;
  return "full";
}

std::optional<Variant> parse_variant(const std::string& name) {
  if (name == "LMS" || name == "baseline") return Variant::full;
  for (const auto& [variant, n] : kVariantNames)
    if (name == n) return variant;
  return std::nullopt;
}

std::vector<std::string> variant_names() {
  std::vector<std::string> out;
  for (const auto& [variant, name] : kVariantNames) out.emplace_back(name);
  return out;
}

void Config::validate() const {
  auto positive = [](long v, const char* name) {
    if (v <= 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(dim, "dim");
  positive(time_dim, "time_dim");
  positive(egl_layers, "egl_layers");
  positive(ugl_layers, "ugl_layers");
  positive(history_length, "history_length");
  positive(epochs, "epochs");
  positive(patience, "patience");
  positive(conv_channels, "conv_channels");
  positive(kernel_width, "kernel_width");
  if (kernel_width % 2 == 0) throw ConfigError("kernel_width must be odd");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  check_rate(alpha, "alpha");
  check_rate(beta, "beta");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(rrelu_lower <= rrelu_upper)) throw ConfigError("rrelu_lower must not exceed rrelu_upper");
  if (!(grad_clip >= 0.0)) throw ConfigError("grad_clip must be non-negative");
  if (static_graph)
    throw ConfigError("static_graph: the static-graph constraint is not implemented");
  try {
    PeriodTable::parse(periods);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("periods: ") + e.what());
  }
}

void Config::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key == "dim") {
    dim = parse_number<int>(key, value);
  } else if (key == "time_dim") {
    time_dim = parse_number<int>(key, value);
  } else if (key == "dropout") {
    dropout = parse_number<double>(key, value);
  } else if (key == "egl_layers") {
    egl_layers = parse_number<int>(key, value);
  } else if (key == "ugl_layers") {
    ugl_layers = parse_number<int>(key, value);
  } else if (key == "history_length" || key == "k") {
    history_length = parse_number<int>(key, value);
  } else if (key == "alpha") {
    alpha = parse_number<double>(key, value);
  } else if (key == "beta") {
    beta = parse_number<double>(key, value);
  } else if (key == "learning_rate" || key == "lr") {
    learning_rate = parse_number<double>(key, value);
  } else if (key == "epochs") {
    epochs = parse_number<int>(key, value);
  } else if (key == "patience") {
    patience = parse_number<int>(key, value);
  } else if (key == "seed") {
    seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "variant") {
    auto v = parse_variant(value);
    if (!v) throw ConfigError("unknown variant '" + value + "'");
    variant = *v;
  } else if (key == "periods") {
    periods = value;
  } else if (key == "aggregation") {
    if (value == "mean") {
      aggregation = Aggregation::mean;
    } else if (value == "sum") {
      aggregation = Aggregation::sum;
    } else {
      throw ConfigError("aggregation must be 'mean' or 'sum'");
    }
  } else if (key == "mask_mode") {
    if (value == "exclude") {
      mask_mode = MaskMode::exclude;
    } else if (value == "multiply") {
      mask_mode = MaskMode::multiply;
    } else {
      throw ConfigError("mask_mode must be 'exclude' or 'multiply'");
    }
  } else if (key == "conv_channels") {
    conv_channels = parse_number<int>(key, value);
  } else if (key == "kernel_width") {
    kernel_width = parse_number<int>(key, value);
  } else if (key == "rrelu_lower") {
    rrelu_lower = parse_number<double>(key, value);
  } else if (key == "rrelu_upper") {
    rrelu_upper = parse_number<double>(key, value);
  } else if (key == "leaky_slope") {
    leaky_slope = parse_number<double>(key, value);
  } else if (key == "grad_clip") {
    grad_clip = parse_number<double>(key, value);
  } else if (key == "strict_indicator") {
    strict_indicator = parse_bool(key, value);
  } else if (key == "static_graph") {
    static_graph = parse_bool(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

std::map<std::string, std::string> Config::to_map() const {
  return {
      {"dim", std::to_string(dim)},
      {"time_dim", std::to_string(time_dim)},
      {"dropout", format_double(dropout)},
      {"egl_layers", std::to_string(egl_layers)},
      {"ugl_layers", std::to_string(ugl_layers)},
      {"history_length", std::to_string(history_length)},
      {"alpha", format_double(alpha)},
      {"beta", format_double(beta)},
      {"learning_rate", format_double(learning_rate)},
      {"epochs", std::to_string(epochs)},
      {"patience", std::to_string(patience)},
      {"seed", std::to_string(seed)},
      {"variant", variant_name(variant)},
      {"periods", periods},
      {"aggregation", aggregation == Aggregation::mean ? "mean" : "sum"},
      {"mask_mode", mask_mode == MaskMode::exclude ? "exclude" : "multiply"},
      {"conv_channels", std::to_string(conv_channels)},
      {"kernel_width", std::to_string(kernel_width)},
      {"rrelu_lower", format_double(rrelu_lower)},
      {"rrelu_upper", format_double(rrelu_upper)},
      {"leaky_slope", format_double(leaky_slope)},
      {"grad_clip", format_double(grad_clip)},
      {"strict_indicator", strict_indicator ? "true" : "false"},
      {"static_graph", static_graph ? "true" : "false"},
  };
}

std::string Config::to_text() const {
  std::ostringstream out;
  for (const auto& [key, value] : to_map()) out << key << " = " << value << '\n';
  return out.str();
}

Config Config::parse_text(const std::string& text) {
  Config config;
  config.merge_text(text);
  return config;
}

void Config::merge_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    set(line.substr(0, eq), line.substr(eq + 1));
  }
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str());
}

std::vector<std::string> config_diff(const Config& a, const Config& b) {
  std::vector<std::string> keys;
  const auto ma = a.to_map();
  const auto mb = b.to_map();
  for (const auto& [key, value] : ma)
    if (mb.at(key) != value) keys.push_back(key);
  return keys;
}

}  // namespace lms
