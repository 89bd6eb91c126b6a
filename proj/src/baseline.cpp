#include "emgstream/baseline.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "emgstream/error.hpp"
#include "emgstream/metrics.hpp"
#include "nlohmann/json.hpp"

namespace emgstream {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {
constexpr double kStdFloor = 1e-8;
}

VectorXd FeatureStandardizer::apply(const VectorXd& x) const {
  if (x.size() != mean.size()) fail(ErrorKind::Shape, "standardizer: feature size mismatch");
  return ((x - mean).array() / std.array()).matrix();
}

FeatureStandardizer fit_standardizer(const MatrixXd& features) {
  FeatureStandardizer s;
  s.mean = features.colwise().mean();
  const MatrixXd centered = features.rowwise() - s.mean.transpose();
  s.std = (centered.array().square().colwise().mean().sqrt()).matrix().transpose();
  s.std = s.std.cwiseMax(kStdFloor);
  return s;
}

VectorXd featurize(const MatrixXd& window) {
  const Eigen::Index t_len = window.rows();
  const Eigen::Index c = window.cols();
  if (t_len < 2) fail(ErrorKind::InvalidArg, "featurize: window needs at least 2 samples");

  VectorXd out(3 * c);
  Eigen::FFT<double> fft;
  std::vector<double> signal(static_cast<size_t>(t_len));
  std::vector<std::complex<double>> spectrum;
  for (Eigen::Index ch = 0; ch < c; ++ch) {
    const auto col = window.col(ch);
    const double rms = std::sqrt(col.array().square().mean());
    double wl = 0;
    for (Eigen::Index t = 1; t < t_len; ++t) wl += std::abs(col(t) - col(t - 1));

    for (Eigen::Index t = 0; t < t_len; ++t) signal[static_cast<size_t>(t)] = col(t);
    fft.fwd(spectrum, signal);
    // One-sided magnitudes, zero-frequency bin excluded.
    std::vector<double> mags;
    for (Eigen::Index k = 1; k <= t_len / 2; ++k)
      mags.push_back(std::abs(spectrum[static_cast<size_t>(k)]));
    std::sort(mags.begin(), mags.end());
    const size_t m = mags.size();
    const double med = (m % 2 == 1) ? mags[m / 2] : 0.5 * (mags[m / 2 - 1] + mags[m / 2]);

    out(3 * ch + 0) = rms;
    out(3 * ch + 1) = wl;
    out(3 * ch + 2) = med;
  }
  return out;
}

LdaModel fit_lda(const MatrixXd& features, const std::vector<int>& labels, int num_classes,
                 double shrinkage) {
  const Eigen::Index n = features.rows();
  const Eigen::Index f = features.cols();
  if (n != static_cast<Eigen::Index>(labels.size()))
    fail(ErrorKind::Shape, "fit_lda: feature rows != label count");
  if (num_classes < 2) fail(ErrorKind::InvalidArg, "fit_lda: needs at least 2 classes");

  LdaModel model;
  model.standardizer = fit_standardizer(features);
  MatrixXd x(n, f);
  for (Eigen::Index i = 0; i < n; ++i)
    x.row(i) = model.standardizer.apply(features.row(i).transpose()).transpose();

  std::vector<int64_t> counts(static_cast<size_t>(num_classes), 0);
  model.means = MatrixXd::Zero(num_classes, f);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<size_t>(i)];
    if (y < 0 || y >= num_classes) fail(ErrorKind::InvalidArg, "fit_lda: label outside [0, K)");
    ++counts[static_cast<size_t>(y)];
    model.means.row(y) += x.row(i);
  }
  int present = 0;
  for (int k = 0; k < num_classes; ++k)
    if (counts[static_cast<size_t>(k)] > 0) {
      model.means.row(k) /= static_cast<double>(counts[static_cast<size_t>(k)]);
      ++present;
    }
  if (present < 2) fail(ErrorKind::InvalidArg, "fit_lda: needs samples from at least 2 classes");

  MatrixXd scatter = MatrixXd::Zero(f, f);
  for (Eigen::Index i = 0; i < n; ++i) {
    const VectorXd d = (x.row(i) - model.means.row(labels[static_cast<size_t>(i)])).transpose();
    scatter.noalias() += d * d.transpose();
  }
  MatrixXd cov = scatter / std::max<double>(1.0, static_cast<double>(n - present));
  const double mean_diag = cov.trace() / static_cast<double>(f);
  cov = (1.0 - shrinkage) * cov +
        shrinkage * mean_diag * MatrixXd::Identity(f, f);

  Eigen::LDLT<MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    fail(ErrorKind::Numeric, "fit_lda: pooled covariance singular even after shrinkage");
  model.cov_inv = ldlt.solve(MatrixXd::Identity(f, f));

  model.log_priors = VectorXd::Constant(num_classes, -1e300);
  for (int k = 0; k < num_classes; ++k)
    if (counts[static_cast<size_t>(k)] > 0)
      model.log_priors(k) =
          std::log(static_cast<double>(counts[static_cast<size_t>(k)]) / static_cast<double>(n));
  return model;
}

VectorXd lda_scores(const LdaModel& model, const VectorXd& raw_feature) {
  const VectorXd x = model.standardizer.apply(raw_feature);
  const int k = static_cast<int>(model.means.rows());
  VectorXd scores(k);
  const VectorXd sx = model.cov_inv * x;
  for (int i = 0; i < k; ++i) {
    const VectorXd mu = model.means.row(i).transpose();
    scores(i) = mu.dot(sx) - 0.5 * mu.dot(model.cov_inv * mu) + model.log_priors(i);
  }
  return scores;
}

int predict_lda(const LdaModel& model, const VectorXd& raw_feature) {
  const VectorXd s = lda_scores(model, raw_feature);
  int best = 0;
  for (int i = 1; i < s.size(); ++i)
    if (s(i) > s(best)) best = i;
  return best;
}

namespace {

int majority_label(const std::vector<int>& labels, int num_classes) {
  std::vector<int64_t> counts(static_cast<size_t>(num_classes), 0);
  for (int y : labels) ++counts[static_cast<size_t>(y)];
  int best = 0;
  for (int k = 1; k < num_classes; ++k)
    if (counts[static_cast<size_t>(k)] > counts[static_cast<size_t>(best)]) best = k;
  return best;
}

}  // namespace

LdaModel train_baseline(const std::vector<Recording>& recs, const WindowSpec& wspec,
                        int median_window, double shrinkage) {
  if (recs.empty()) fail(ErrorKind::Config, "baseline training set is empty");
  const int k = recs.front().num_classes();
  const int c = recs.front().channels();

  std::vector<VectorXd> rows;
  std::vector<int> labels;
  for (const auto& rec : recs) {
    for (const Window& w : windows(rec, wspec)) {
      rows.push_back(featurize(w.emg));
      labels.push_back(majority_label(w.labels, k));
    }
  }
  if (rows.empty()) fail(ErrorKind::Config, "baseline: no windows in training set");
  MatrixXd feats(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i) feats.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();

  LdaModel model = fit_lda(feats, labels, k, shrinkage);
  model.class_names = recs.front().class_names;
  model.window_spec = wspec;
  model.median_window = median_window;
  model.sample_rate_hz = recs.front().sample_rate_hz;
  model.channels = c;
  return model;
}

PredictionStream baseline_stream(const Recording& rec_raw, const LdaModel& model) {
  if (rec_raw.channels() != model.channels)
    fail(ErrorKind::Config, "baseline: recording channels != model channels");
  const Recording rec = preprocess(rec_raw, model.median_window);
  const int t_len = model.window_spec.window_len;

  PredictionStream out;
  out.config.window_len = t_len;
  out.config.lookahead = 0;
  out.config.hold = model.window_spec.stride;
  out.config.inference_stride = model.window_spec.stride;
  out.config.sample_rate_hz = model.sample_rate_hz;
  out.num_classes = static_cast<int>(model.means.rows());
  out.warmup_end = t_len - 1;

  std::vector<std::pair<int64_t, int>> decisions;
  for (int64_t end = t_len - 1; end < rec.length(); end += model.window_spec.stride) {
    MatrixXd win = rec.samples.middleRows(end - t_len + 1, t_len);
    decisions.emplace_back(end, predict_lda(model, featurize(win)));
  }
  out.labels = upsample_zoh(decisions, rec.length());
  for (const auto& [t, label] : decisions) {
    DecisionRecord dr;
    dr.t = t;
    dr.label = label;
    dr.windows_used = 1;
    dr.max_sample_read = t;
    out.decisions.push_back(std::move(dr));
  }
  return out;
}

void save_lda(const LdaModel& model, const std::string& path) {
  auto mat_to_json = [](const MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  auto vec_to_json = [](const VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
  };
  json j{{"format", "emgstream-lda-v1"},
         {"class_names", model.class_names},
         {"window_len", model.window_spec.window_len},
         {"stride", model.window_spec.stride},
         {"median_window", model.median_window},
         {"sample_rate_hz", model.sample_rate_hz},
         {"channels", model.channels},
         {"means", mat_to_json(model.means)},
         {"cov_inv", mat_to_json(model.cov_inv)},
         {"log_priors", vec_to_json(model.log_priors)},
         {"feat_mean", vec_to_json(model.standardizer.mean)},
         {"feat_std", vec_to_json(model.standardizer.std)}};
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write baseline model: " + path);
  out << j.dump(2) << "\n";
}

LdaModel load_lda(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open baseline model: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, "baseline model " + path + ": " + e.what());
  }
  auto mat_from_json = [](const json& rows) {
    const auto r = rows.size();
    const auto c = r ? rows[0].size() : 0;
    MatrixXd m(r, c);
    for (size_t i = 0; i < r; ++i)
      for (size_t jx = 0; jx < c; ++jx) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(jx)) = rows[i][jx].get<double>();
    return m;
  };
  auto vec_from_json = [](const json& arr) {
    VectorXd v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    return v;
  };
  LdaModel model;
  try {
    if (j.at("format").get<std::string>() != "emgstream-lda-v1")
      fail(ErrorKind::Parse, "baseline model " + path + ": unknown format tag");
    model.class_names = j.at("class_names").get<std::vector<std::string>>();
    model.window_spec.window_len = j.at("window_len").get<int>();
    model.window_spec.stride = j.at("stride").get<int>();
    model.median_window = j.at("median_window").get<int>();
    model.sample_rate_hz = j.at("sample_rate_hz").get<int>();
    model.channels = j.at("channels").get<int>();
    model.means = mat_from_json(j.at("means"));
    model.cov_inv = mat_from_json(j.at("cov_inv"));
    model.log_priors = vec_from_json(j.at("log_priors"));
    model.standardizer.mean = vec_from_json(j.at("feat_mean"));
    model.standardizer.std = vec_from_json(j.at("feat_std"));
  } catch (const json::exception& e) {
    fail(ErrorKind::Schema, "baseline model " + path + ": " + e.what());
  }
  return model;
}

}  // namespace emgstream
