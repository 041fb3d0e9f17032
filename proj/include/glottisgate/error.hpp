#pragma once

#include <stdexcept>
#include <string>

namespace glottisgate {

/// Malformed arguments: zero-sized images, mismatched dimensions,
/// boxes outside the frame, negative counts.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation called on an object that is not ready for it
/// (e.g. motion segmentation before initialization).
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A configuration that violates its own invariants.
class InvalidConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A replay backend was asked for a frame it has no stored prediction for.
class MissingPrediction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optional runtime (e.g. ONNX inference) not compiled in.
class FeatureDisabled : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required file or directory does not exist or cannot be read.
class MissingInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace glottisgate
