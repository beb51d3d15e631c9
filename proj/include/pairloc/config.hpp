#pragma once

#include <stdexcept>
#include <string>

#include "pairloc/experiment.hpp"

namespace pairloc {

/// Bad config input. key() is "section.key" (empty for syntax errors);
/// line() is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, const std::string& key, int line,
              const std::string& message);
  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

/// INI text (sections [run] [geometry] [interaction] [sweep] [time] [dtwa]
/// [pairs]; see README for keys). A `preset` key in [run] seeds defaults.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

/// INI rendering that parse_config reads back to the same config.
std::string config_to_ini(const ExperimentConfig& config);

}  // namespace pairloc
