#pragma once

#include <stdexcept>
#include <string>

namespace signscan {

/// Base class for all recoverable signscan errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tangent estimation window holds fewer than 3 edge points.
struct InsufficientNeighbors : Error {
  explicit InsufficientNeighbors(const std::string& m = "insufficient neighbors for tangent fit") : Error(m) {}
};

/// Sampled triple cannot produce a center (parallel tangents or coincident construction lines).
struct DegenerateSample : Error {
  explicit DegenerateSample(const std::string& m = "degenerate point/tangent sample") : Error(m) {}
};

/// The 3x3 conic system has no solution.
struct SingularSystem : Error {
  explicit SingularSystem(const std::string& m = "singular conic system") : Error(m) {}
};

/// Conic coefficients do not describe an ellipse (ac - b^2 <= 0 or a <= 0).
struct NotAnEllipse : Error {
  explicit NotAnEllipse(const std::string& m = "conic is not an ellipse") : Error(m) {}
};

/// Moment indices violate |m| <= n.
struct InvalidIndices : Error {
  explicit InvalidIndices(const std::string& m = "invalid moment indices") : Error(m) {}
};

/// SVM training set lacks one of the two labels.
struct SingleClassData : Error {
  explicit SingleClassData(const std::string& m = "training data contains a single class") : Error(m) {}
};

/// Vector dimensionality does not match the model.
struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& m = "dimension mismatch") : Error(m) {}
};

/// Synthetic scene placement failed after the retry budget.
struct LayoutFailure : Error {
  explicit LayoutFailure(const std::string& m = "could not place scene objects without overlap") : Error(m) {}
};

/// File could not be read, written, or decoded.
struct IoError : Error {
  using Error::Error;
};

/// Model file exists but does not parse.
struct ModelFormatError : Error {
  using Error::Error;
};

}  // namespace signscan
