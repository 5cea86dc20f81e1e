#pragma once

#include <stdexcept>
#include <string>

namespace trajflow {

// A least-squares system whose factorization detected numerical rank
// deficiency (and regularization was not enabled to absorb it).
class IllConditionedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation requested on an object that was not prepared for it,
// e.g. encoding with an uncalibrated quantizing codec.
class InvalidStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training diverged (non-finite loss). Carries the offending step index.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& msg, int step)
      : std::runtime_error(msg), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

// Sampler produced a non-finite intermediate state.
class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The executor needed an action for a tick the queue does not cover.
class StarvationError : public std::runtime_error {
 public:
  StarvationError(const std::string& msg, int tick)
      : std::runtime_error(msg), tick_(tick) {}
  int tick() const noexcept { return tick_; }

 private:
  int tick_;
};

}  // namespace trajflow
