#pragma once

#include <functional>
#include <string>
#include <vector>

#include "foldcont/io.hpp"
#include "foldcont/shape.hpp"

namespace foldcont {

MappedProblem build_problem(const RunConfig& c);

/// Continuation settings from `c`; `sink` receives event lines unless the
/// log level is quiet, and Newton iterations as well when it is verbose.
ContinuationConfig continuation_config(const RunConfig& c, std::function<void(const std::string&)> sink = {});

struct ShapeCheck {
  ShapeDerivativeReport report;
  Json json;  // report plus fold, field and threshold verdicts
  bool passed = false;
};

/// Traces to the first fold and measures the domain derivative there along
/// the configured collar mode. Throws DomainError when the field vanishes.
ShapeCheck run_shape_check(const RunConfig& c, const ContinuationConfig& cc);

ExperimentReport run_experiment(const RunConfig& c);

struct OracleTables {
  std::string radial_csv;    // b,mu,sup
  std::string shooting_csv;  // mu,root,alpha
  Json json;
};

/// Throws ConfigError for an empty b grid.
OracleTables run_oracle(const RunConfig& c);

struct Spectrum {
  double mu = 0.0;
  int morse_index = 0;
  std::vector<EigenPair> pairs;
  std::string csv;  // index,sigma,residual
};

/// Eigen table at `point` (needs a stored state) or, without one, on the
/// minimal branch at spectrum.mu.
Spectrum run_spectrum(const RunConfig& c, const ContinuationConfig& cc, const BranchPoint* point = nullptr);

}  // namespace foldcont
