// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

namespace repoqa::calibration {

/// Overall judge scores per (question, model) across independent runs.
struct ScoreMatrix {
  std::vector<std::string> questions;
  std::vector<std::string> models;
  std::map<std::pair<std::string, std::string>, std::vector<double>> totals;

  /// Throws CalibrationError when a (question, model) cell is empty or a
  /// score leaves [5, 50].
  void validate() const;
};

struct DifficultyRecord {
  std::string question;
  std::map<std::string, double> per_model_mean;
  std::map<std::string, double> per_model_z;
  double difficulty = 0.0;
};

using CellMap = std::map<std::pair<std::string, std::string>, double>;

/// Arithmetic mean per (question, model) cell.
CellMap aggregate_scores(const ScoreMatrix& matrix);

/// Per-model standardization over all questions, using the population
/// standard deviation. A model with sigma below 1e-12 maps to all zeros.
/// Requires at least 2 questions per model.
CellMap zscore_normalize(const CellMap& means);

/// Difficulty(q) = -mean over models of z(q, m). Every question must
/// carry a z value for every model.
std::map<std::string, double> difficulty(const CellMap& z,
                                         const std::vector<std::string>& models);

/// Full Eq.-style pipeline: aggregate, normalize, negate-consensus.
std::vector<DifficultyRecord> calibrate(const ScoreMatrix& matrix);

/// Retains the ceil(keep_fraction * n) hardest questions by descending
/// difficulty; ties broken by question id ascending.
std::vector<std::string> filter_by_difficulty(
    const std::vector<DifficultyRecord>& records, double keep_fraction);

}  // namespace repoqa::calibration
