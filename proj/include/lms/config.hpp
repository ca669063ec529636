#pragma once

#include "lms/decoder.hpp"
#include "lms/egl.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lms {

/// Model variants: the full model and its component ablations.
enum class Variant {
  full,
  no_egl,           // "-EGL"
  no_ugl,           // "-UGL"
  ugl_entirety,     // "+UGL(Entirety)"
  no_tgl,           // "-TGL"
  no_time_ugl,      // "-T(UGL)"
  no_time_decoder,  // "-T(Decoder)"
  gate_sum,         // "-GATE+Sum"
  gate_linear,      // "-GATE+Linear"
};

std::string variant_name(Variant v);
std::optional<Variant> parse_variant(const std::string& name);
/// Every accepted variant name, full model first.
std::vector<std::string> variant_names();

struct Config {
  int dim = 200;
  int time_dim = 32;
  double dropout = 0.2;
  int egl_layers = 2;
  int ugl_layers = 2;
  int history_length = 25;
  double alpha = 0.3;
  double beta = 0.7;
  double learning_rate = 0.001;
  int epochs = 30;
  int patience = 5;
  std::uint64_t seed = 42;
  Variant variant = Variant::full;
  std::string periods = "3,7,14,30";
  Aggregation aggregation = Aggregation::mean;
  MaskMode mask_mode = MaskMode::exclude;
  int conv_channels = 50;
  int kernel_width = 3;
  double rrelu_lower = 1.0 / 8.0;
  double rrelu_upper = 1.0 / 3.0;
  double leaky_slope = 0.2;
  double grad_clip = 1.0;
  /// Evaluation indicator absorbs only training facts.
  bool strict_indicator = false;
  /// Reserved for the static-graph constraint; not implemented.
  bool static_graph = false;

  /// Throws ConfigError on any out-of-range value.
  void validate() const;

  /// Applies one "key=value" setting; throws ConfigError on unknown keys.
  void set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> to_map() const;
  /// Flat "key = value" lines, sorted by key.
  std::string to_text() const;
  static Config parse_text(const std::string& text);
  /// Applies "key = value" lines (# comments allowed) over the current values.
  void merge_text(const std::string& text);
  static Config load(const std::string& path);
};

/// Keys whose values differ between two configs.
std::vector<std::string> config_diff(const Config& a, const Config& b);

}  // namespace lms
