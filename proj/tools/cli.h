#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "grl/eval.h"
#include "grl/model.h"
#include "grl/sampling.h"
#include "grl/synth.h"
#include "grl/training.h"
#include "json.hpp"

namespace grl::cli {

struct ConfigKey {
  std::string name;  // underscore form; the flag is --name-with-dashes
  std::string default_value;
  std::string help;
  bool is_flag = false;  // boolean switch taking no value on the command line
};

// Every knob of every command, in echo order.
const std::vector<ConfigKey>& config_keys();

// Flat key=value configuration: defaults, then a config file, then flags.
class RunConfig {
 public:
  RunConfig();

  // Throws InputError for unknown keys.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  // `key=value` lines; blank lines and lines starting with '#' are skipped.
  void load_file(const std::string& path);

  std::string echo() const;
  nlohmann::json to_json() const;

  ModelConfig model() const;
  TrainConfig train() const;
  WalkConfig walk() const;
  SplitFractions split() const;
  PredictorConfig predictor() const;
  SynthConfig synth() const;

 private:
  std::map<std::string, std::string> values_;
};

// Entry point behind the `grl` executable. `args` excludes the program name.
// Returns 0 on success, 1 on internal failure, 2 on usage or input errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace grl::cli
