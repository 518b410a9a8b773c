#include "signscan/learn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "signscan/errors.hpp"
#include "signscan/format.hpp"
#include "signscan/rng.hpp"

namespace signscan {

namespace {

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& samples) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  const auto d = static_cast<Eigen::Index>(samples.front().size());
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(samples[i].size()) != d) throw DimensionMismatch();
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = samples[i][j];
  }
  return m;
}

// canonical sign: the largest-magnitude entry (first on ties) is positive
void fix_sign(Eigen::VectorXd& v) {
  Eigen::Index pivot = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) > std::abs(v(pivot))) pivot = i;
  }
  if (v(pivot) < 0.0) v = -v;
}

}  // namespace

PcaModel pca_fit(const std::vector<std::vector<double>>& samples, double variance_keep) {
  if (samples.size() < 2) throw std::invalid_argument("pca_fit: need at least 2 samples");
  if (!(variance_keep > 0.0 && variance_keep <= 1.0)) {
    throw std::invalid_argument("pca_fit: variance_keep must be in (0,1]");
  }
  const Eigen::MatrixXd m = to_matrix(samples);
  const Eigen::Index n = m.rows();
  const Eigen::Index d = m.cols();

  const Eigen::VectorXd mean = m.colwise().mean();
  const Eigen::MatrixXd centered = m.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("pca_fit: eigendecomposition failed");

  // eigenvalues ascending; walk from the largest down
  std::vector<double> evs(static_cast<std::size_t>(d));
  double total = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    evs[static_cast<std::size_t>(i)] = std::max(0.0, solver.eigenvalues()(d - 1 - i));
    total += evs[static_cast<std::size_t>(i)];
  }

  PcaModel model;
  model.mean.assign(mean.data(), mean.data() + d);
  if (total <= 0.0) return model;  // identical samples: k = 0

  double cum = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::VectorXd comp = solver.eigenvectors().col(d - 1 - i);
    fix_sign(comp);
    model.components.emplace_back(comp.data(), comp.data() + d);
    model.explained_variance.push_back(evs[static_cast<std::size_t>(i)]);
    cum += evs[static_cast<std::size_t>(i)];
    if (cum >= variance_keep * total - 1e-12 * total) break;
  }
  return model;
}

std::vector<double> pca_project(const PcaModel& model, const std::vector<double>& v) {
  if (v.size() != model.mean.size()) throw DimensionMismatch();
  std::vector<double> out(model.components.size(), 0.0);
  for (std::size_t r = 0; r < model.components.size(); ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) s += model.components[r][j] * (v[j] - model.mean[j]);
    out[r] = s;
  }
  return out;
}

SvmModel svm_train(const std::vector<LabeledSample>& samples, double c_param, int epochs,
                   std::uint64_t seed) {
  if (c_param <= 0.0) throw std::invalid_argument("svm_train: c_param must be positive");
  if (epochs < 1) throw std::invalid_argument("svm_train: epochs must be positive");
  bool pos = false, neg = false;
  for (const LabeledSample& s : samples) {
    if (s.label == 1) pos = true;
    else if (s.label == -1) neg = true;
    else throw std::invalid_argument("svm_train: labels must be +1 or -1");
  }
  if (!pos || !neg) throw SingleClassData();

  const std::size_t n = samples.size();
  const std::size_t dim = samples.front().features.size();
  for (const LabeledSample& s : samples) {
    if (s.features.size() != dim) throw DimensionMismatch();
  }

  const double lambda = 1.0 / (c_param * static_cast<double>(n));
  const double radius = 1.0 / std::sqrt(lambda);

  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  std::vector<double> w_sum(dim, 0.0);
  double b_sum = 0.0;
  long avg_count = 0;

  const long total_steps = static_cast<long>(epochs) * static_cast<long>(n);
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  long t = 0;
  for (int e = 0; e < epochs; ++e) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const LabeledSample& s = samples[idx];
      double margin = b;
      for (std::size_t j = 0; j < dim; ++j) margin += w[j] * s.features[j];
      margin *= s.label;

      const double shrink = 1.0 - eta * lambda;
      for (double& wj : w) wj *= shrink;
      if (margin < 1.0) {
        for (std::size_t j = 0; j < dim; ++j) w[j] += eta * s.label * s.features[j];
        b += eta * s.label;
      }
      // projection onto the 1/sqrt(lambda) ball keeps the iterates bounded
      double norm2 = 0.0;
      for (double wj : w) norm2 += wj * wj;
      if (norm2 > radius * radius) {
        const double f = radius / std::sqrt(norm2);
        for (double& wj : w) wj *= f;
      }

      if (2 * t > total_steps) {
        for (std::size_t j = 0; j < dim; ++j) w_sum[j] += w[j];
        b_sum += b;
        ++avg_count;
      }
    }
  }

  SvmModel model;
  model.c_param = c_param;
  model.weights.resize(dim);
  if (avg_count == 0) {  // degenerate tiny run: fall back to the final iterate
    model.weights = w;
    model.bias = b;
  } else {
    for (std::size_t j = 0; j < dim; ++j) model.weights[j] = w_sum[j] / static_cast<double>(avg_count);
    model.bias = b_sum / static_cast<double>(avg_count);
  }
  return model;
}

std::pair<double, int> svm_decide(const SvmModel& model, const std::vector<double>& v) {
  if (v.size() != model.weights.size()) throw DimensionMismatch();
  double score = model.bias;
  for (std::size_t j = 0; j < v.size(); ++j) score += model.weights[j] * v[j];
  return {score, score >= 0.0 ? 1 : -1};
}

double svm_objective(const SvmModel& model, const std::vector<LabeledSample>& samples) {
  double obj = 0.0;
  for (double wj : model.weights) obj += wj * wj;
  obj *= 0.5;
  for (const LabeledSample& s : samples) {
    const double score = svm_decide(model, s.features).first;
    obj += model.c_param * std::max(0.0, 1.0 - s.label * score);
  }
  return obj;
}

std::vector<double> Standardizer::apply(const std::vector<double>& v) const {
  if (v.size() != mean.size()) throw DimensionMismatch();
  std::vector<double> out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = (v[j] - mean[j]) / scale[j];
  return out;
}

Standardizer standardizer_fit(const std::vector<std::vector<double>>& samples) {
  if (samples.empty()) throw std::invalid_argument("standardizer_fit: empty sample set");
  const std::size_t d = samples.front().size();
  Standardizer st;
  st.mean.assign(d, 0.0);
  st.scale.assign(d, 1.0);
  for (const auto& s : samples) {
    if (s.size() != d) throw DimensionMismatch();
    for (std::size_t j = 0; j < d; ++j) st.mean[j] += s[j];
  }
  for (double& m : st.mean) m /= static_cast<double>(samples.size());
  for (std::size_t j = 0; j < d; ++j) {
    double ss = 0.0;
    for (const auto& s : samples) ss += (s[j] - st.mean[j]) * (s[j] - st.mean[j]);
    const double sd = std::sqrt(ss / static_cast<double>(samples.size()));
    st.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return st;
}

double SignClassifier::score(const FeatureVector& fv) const {
  const auto arr = fv.to_array();
  std::vector<double> v(arr.begin(), arr.end());
  return svm_decide(svm, pca_project(pca, standardizer.apply(v))).first;
}

void SignClassifier::save(std::ostream& os) const {
  const std::size_t d = standardizer.mean.size();
  const std::size_t k = svm.weights.size();
  os << "dims " << d << ' ' << k << '\n';
  os << "mean";
  for (double m : standardizer.mean) os << ' ' << format_double(m);
  os << '\n';
  os << "scale";
  for (double s : standardizer.scale) os << ' ' << format_double(s);
  os << '\n';
  for (std::size_t r = 0; r < k; ++r) {
    os << "pca_component_" << r;
    for (double c : pca.components[r]) os << ' ' << format_double(c);
    os << '\n';
  }
  os << "svm_w";
  for (double w : svm.weights) os << ' ' << format_double(w);
  os << '\n';
  os << "svm_b " << format_double(svm.bias) << '\n';
  os << "c_param " << format_double(svm.c_param) << '\n';
}

namespace {

std::vector<std::string> tokens_of(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> expect_line(std::istream& is, const std::string& keyword, std::size_t n_values) {
  std::string line;
  if (!std::getline(is, line)) throw ModelFormatError("model file: missing " + keyword + " line");
  const auto toks = tokens_of(line);
  if (toks.empty() || toks[0] != keyword || toks.size() != n_values + 1) {
    throw ModelFormatError("model file: malformed " + keyword + " line");
  }
  return toks;
}

std::vector<double> parse_values(const std::vector<std::string>& toks) {
  std::vector<double> out;
  out.reserve(toks.size() - 1);
  try {
    for (std::size_t i = 1; i < toks.size(); ++i) out.push_back(parse_double(toks[i]));
  } catch (const Error&) {
    throw ModelFormatError("model file: bad numeric value");
  }
  return out;
}

}  // namespace

SignClassifier SignClassifier::load(std::istream& is) {
  const auto dims = expect_line(is, "dims", 2);
  std::size_t d = 0, k = 0;
  try {
    d = static_cast<std::size_t>(parse_long(dims[1]));
    k = static_cast<std::size_t>(parse_long(dims[2]));
  } catch (const Error&) {
    throw ModelFormatError("model file: bad dims values");
  }
  if (d == 0 || d > 4096 || k > d) throw ModelFormatError("model file: implausible dims");

  SignClassifier c;
  c.standardizer.mean = parse_values(expect_line(is, "mean", d));
  c.standardizer.scale = parse_values(expect_line(is, "scale", d));
  for (double s : c.standardizer.scale) {
    if (!(s > 0.0)) throw ModelFormatError("model file: non-positive scale");
  }
  c.pca.mean.assign(d, 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    c.pca.components.push_back(parse_values(expect_line(is, "pca_component_" + std::to_string(r), d)));
  }
  c.svm.weights = parse_values(expect_line(is, "svm_w", k));
  c.svm.bias = parse_values(expect_line(is, "svm_b", 1))[0];
  c.svm.c_param = parse_values(expect_line(is, "c_param", 1))[0];
  if (!(c.svm.c_param > 0.0)) throw ModelFormatError("model file: c_param must be positive");
  std::string rest;
  while (std::getline(is, rest)) {
    if (!tokens_of(rest).empty()) throw ModelFormatError("model file: trailing content");
  }
  return c;
}

SignClassifier train_classifier(const std::vector<std::pair<FeatureVector, int>>& labeled,
                                double variance_keep, double c_param, int epochs,
                                std::uint64_t seed) {
  std::vector<std::vector<double>> raw;
  raw.reserve(labeled.size());
  for (const auto& [fv, label] : labeled) {
    (void)label;
    const auto arr = fv.to_array();
    raw.emplace_back(arr.begin(), arr.end());
  }

  SignClassifier c;
  c.standardizer = standardizer_fit(raw);
  std::vector<std::vector<double>> std_samples;
  std_samples.reserve(raw.size());
  for (const auto& r : raw) std_samples.push_back(c.standardizer.apply(r));

  c.pca = pca_fit(std_samples, variance_keep);
  // standardized data is mean-zero up to rounding; pin the model mean at zero
  // so the text serialization (which stores no PCA mean) is lossless
  std::fill(c.pca.mean.begin(), c.pca.mean.end(), 0.0);

  std::vector<LabeledSample> projected;
  projected.reserve(std_samples.size());
  for (std::size_t i = 0; i < std_samples.size(); ++i) {
    projected.push_back({pca_project(c.pca, std_samples[i]), labeled[i].second});
  }
  c.svm = svm_train(projected, c_param, epochs, seed);
  return c;
}

std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> split_samples(
    std::vector<LabeledSample> samples, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
    throw std::invalid_argument("split_samples: test_fraction must be in [0,1]");
  }
  Rng rng(seed);
  rng.shuffle(samples);
  const auto n_test = static_cast<std::size_t>(test_fraction * static_cast<double>(samples.size()));
  std::vector<LabeledSample> test(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<LabeledSample> train(samples.begin() + static_cast<std::ptrdiff_t>(n_test), samples.end());
  return {std::move(train), std::move(test)};
}

}  // namespace signscan
