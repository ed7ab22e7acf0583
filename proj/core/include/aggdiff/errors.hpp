#pragma once

#include <stdexcept>
#include <string>

namespace aggdiff {

/// Base class of every error raised by the library. The stage tag names the
/// pipeline component that failed so the CLI can report it.
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

class InvalidParameter : public Error {
 public:
  explicit InvalidParameter(const std::string& what) : Error("invalid-parameter", what) {}
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error("invalid-input", what) {}
};

class IndexAlignmentError : public Error {
 public:
  explicit IndexAlignmentError(const std::string& what) : Error("index-alignment", what) {}
};

class SolverDiverged : public Error {
 public:
  SolverDiverged(const std::string& what, long step)
      : Error("solver-diverged", what + " (step " + std::to_string(step) + ")"), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

class PositivityLoss : public Error {
 public:
  PositivityLoss(const std::string& what, long step)
      : Error("positivity-loss", what + " (step " + std::to_string(step) + ")"), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

class BudgetExceeded : public Error {
 public:
  explicit BudgetExceeded(const std::string& what) : Error("budget", what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error("format", what) {}
};

}  // namespace aggdiff

namespace aggdiff {

/// Wraps a failure with the pipeline stage it happened in and a command that reproduces it.
class PipelineError : public Error {
 public:
  PipelineError(const std::string& pipeline_stage, const std::string& what, std::string repro)
      : Error(pipeline_stage, what + (repro.empty() ? "" : "\n  reproduce with: " + repro)),
        repro_(std::move(repro)) {}
  const std::string& repro() const noexcept { return repro_; }

 private:
  std::string repro_;
};

}  // namespace aggdiff
