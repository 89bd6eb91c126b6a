#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "emgstream/recording.hpp"
#include "emgstream/stream.hpp"

namespace emgstream {

/// Per-feature standardization statistics learned on training data and
/// applied identically at test time; std is floored at 1e-8.
struct FeatureStandardizer {
  Eigen::VectorXd mean, std;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
};

FeatureStandardizer fit_standardizer(const Eigen::MatrixXd& features);

/// Per channel: RMS, waveform length, median amplitude-spectrum magnitude
/// (DFT magnitudes over bins 1..T/2, zero-frequency excluded). Concatenated
/// to 3*C values.
Eigen::VectorXd featurize(const Eigen::MatrixXd& window);

/// Multiclass linear discriminant with shrinkage-regularized pooled
/// covariance, used directly as the classifier.
struct LdaModel {
  Eigen::MatrixXd means;       // K x F (standardized feature space)
  Eigen::MatrixXd cov_inv;     // F x F
  Eigen::VectorXd log_priors;  // K
  FeatureStandardizer standardizer;
  std::vector<std::string> class_names;
  WindowSpec window_spec;
  int median_window = 3;
  int sample_rate_hz = 200;
  int channels = 8;
};

/// features: N x F raw (unstandardized) rows; labels in [0, K).
LdaModel fit_lda(const Eigen::MatrixXd& features, const std::vector<int>& labels, int num_classes,
                 double shrinkage = 0.1);

Eigen::VectorXd lda_scores(const LdaModel& model, const Eigen::VectorXd& raw_feature);
int predict_lda(const LdaModel& model, const Eigen::VectorXd& raw_feature);

/// Fits the baseline on preprocessed recordings; each window is labeled by
/// its majority ground-truth class.
LdaModel train_baseline(const std::vector<Recording>& recs, const WindowSpec& wspec,
                        int median_window, double shrinkage = 0.1);

/// Chronological window-by-window replay producing one label per window end,
/// upsampled to the sample rate by zero-order hold. rec must be raw (the
/// model's preprocessing is applied internally).
PredictionStream baseline_stream(const Recording& rec_raw, const LdaModel& model);

void save_lda(const LdaModel& model, const std::string& path);
LdaModel load_lda(const std::string& path);

}  // namespace emgstream
