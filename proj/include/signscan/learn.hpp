#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "signscan/features.hpp"

namespace signscan {

struct PcaModel {
  std::vector<double> mean;                     // d
  std::vector<std::vector<double>> components;  // k orthonormal rows of d
  std::vector<double> explained_variance;       // k, descending

  int input_dims() const { return static_cast<int>(mean.size()); }
  int output_dims() const { return static_cast<int>(components.size()); }
};

struct SvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  double c_param = 1.0;
};

struct LabeledSample {
  std::vector<double> features;
  int label = 0;  // +1 or -1
};

/// Mean-center, eigendecompose the sample covariance and keep the smallest
/// number of leading components whose cumulative explained variance reaches
/// variance_keep. Identical samples (zero covariance) give a k=0 model.
PcaModel pca_fit(const std::vector<std::vector<double>>& samples, double variance_keep = 0.95);

/// components * (v - mean). Throws DimensionMismatch.
std::vector<double> pca_project(const PcaModel& model, const std::vector<double>& v);

/// Minimizes (1/2)|w|^2 + c * sum hinge(y(w.x+b)) by seeded stochastic
/// subgradient descent, step 1/(lambda*t) with lambda = 1/(c*n); the result
/// averages the second half of the iterate sequence. Throws SingleClassData
/// when one label is absent.
SvmModel svm_train(const std::vector<LabeledSample>& samples, double c_param, int epochs,
                   std::uint64_t seed);

/// (score, label): score = w.v + b, label = +1 iff score >= 0.
std::pair<double, int> svm_decide(const SvmModel& model, const std::vector<double>& v);

/// (1/2)|w|^2 + c_param * sum of hinge losses over samples.
double svm_objective(const SvmModel& model, const std::vector<LabeledSample>& samples);

/// Per-dimension z-score transform fitted on training data; zero-variance
/// dimensions keep scale 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  std::vector<double> apply(const std::vector<double>& v) const;
};

Standardizer standardizer_fit(const std::vector<std::vector<double>>& samples);

/// Full rejection model: standardize -> PCA -> linear SVM. A candidate is kept
/// when score(features) >= 0.
struct SignClassifier {
  Standardizer standardizer;
  PcaModel pca;
  SvmModel svm;

  double score(const FeatureVector& fv) const;

  void save(std::ostream& os) const;
  static SignClassifier load(std::istream& is);  // throws ModelFormatError
};

SignClassifier train_classifier(const std::vector<std::pair<FeatureVector, int>>& labeled,
                                double variance_keep, double c_param, int epochs,
                                std::uint64_t seed);

/// Seeded shuffle, then split off floor(n * test_fraction) samples as the test set.
std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> split_samples(
    std::vector<LabeledSample> samples, double test_fraction, std::uint64_t seed);

}  // namespace signscan
