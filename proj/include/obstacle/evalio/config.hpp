#pragma once

// Experiment configuration: "[section]" headers and "key = value" lines,
// '#' comments. Every key is optional; missing keys take the defaults of the
// selected example. Unknown sections or keys are errors.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "obstacle/autodiff/activation.hpp"
#include "obstacle/evalio/formats.hpp"
#include "obstacle/optimizer/neural_oracle.hpp"
#include "obstacle/optimizer/schedule.hpp"

namespace obstacle::evalio {

enum class Algorithm { bilevel, single_level };

struct ExperimentConfig {
  // [problem]
  std::string problem = "example1";
  // [network]
  int blocks = 3;
  int width = 16;
  ad::Activation activation = ad::Activation::swish;
  // [optimizer]
  Algorithm algorithm = Algorithm::bilevel;
  double weight = 1.0;  // single-level w
  opt::HyperParams hp;
  opt::Backend backend = opt::Backend::fused;
  // [stage2]
  bool stage2 = true;
  opt::AdamParams adam;
  // [output]
  std::string out_dir = "runs/example1";
  int grid = 128;
  bool fields = true;

  void validate() const;
};

/// Example defaults for `problem` (gamma, c_k, step sizes, T).
ExperimentConfig default_config(const std::string& problem);

ExperimentConfig parse_config(std::istream& is, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& os, const ExperimentConfig& c);
void write_config(const std::filesystem::path& path, const ExperimentConfig& c);

std::string_view algorithm_name(Algorithm a);

}  // namespace obstacle::evalio
