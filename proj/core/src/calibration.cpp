// SPDX-License-Identifier: Apache-2.0
#include "repoqa/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "repoqa/errors.hpp"

namespace repoqa::calibration {

void ScoreMatrix::validate() const {
  for (const std::string& q : questions) {
    for (const std::string& m : models) {
      const auto it = totals.find({q, m});
      if (it == totals.end() || it->second.empty())
        throw CalibrationError("empty cell: (" + q + ", " + m + ")");
      for (double s : it->second) {
        if (s < 5.0 || s > 50.0)
          throw CalibrationError("overall score outside [5,50]: (" + q + ", " +
                                 m + ")");
      }
    }
  }
}

CellMap aggregate_scores(const ScoreMatrix& matrix) {
  matrix.validate();
  CellMap means;
  for (const std::string& q : matrix.questions) {
    for (const std::string& m : matrix.models) {
      const std::vector<double>& runs = matrix.totals.at({q, m});
      double sum = 0;
      for (double s : runs) sum += s;
      means[{q, m}] = sum / static_cast<double>(runs.size());
    }
  }
  return means;
}

CellMap zscore_normalize(const CellMap& means) {
  std::map<std::string, std::vector<std::pair<std::string, double>>> by_model;
  for (const auto& [key, value] : means)
    by_model[key.second].emplace_back(key.first, value);

  CellMap z;
  for (const auto& [model, cells] : by_model) {
    if (cells.size() < 2)
      throw CalibrationError("model " + model +
                             " needs >= 2 questions to standardize");
    double mu = 0;
    for (const auto& [q, s] : cells) mu += s;
    mu /= static_cast<double>(cells.size());

    double variance = 0;
    for (const auto& [q, s] : cells) variance += (s - mu) * (s - mu);
    variance /= static_cast<double>(cells.size());
    const double sigma = std::sqrt(variance);

    for (const auto& [q, s] : cells)
      z[{q, model}] = sigma < 1e-12 ? 0.0 : (s - mu) / sigma;
  }
  return z;
}

std::map<std::string, double> difficulty(const CellMap& z,
                                         const std::vector<std::string>& models) {
  std::map<std::string, double> out;
  std::map<std::string, std::size_t> counts;
  for (const auto& [key, value] : z) {
    out[key.first] += value;
    ++counts[key.first];
  }
  for (auto& [q, sum] : out) {
    if (counts[q] != models.size())
      throw CalibrationError("question " + q + " missing z values for some models");
    sum = -sum / static_cast<double>(models.size());
  }
  return out;
}

std::vector<DifficultyRecord> calibrate(const ScoreMatrix& matrix) {
  const CellMap means = aggregate_scores(matrix);
  const CellMap z = zscore_normalize(means);
  const std::map<std::string, double> diff = difficulty(z, matrix.models);

  std::vector<DifficultyRecord> records;
  records.reserve(matrix.questions.size());
  for (const std::string& q : matrix.questions) {
    DifficultyRecord record;
    record.question = q;
    for (const std::string& m : matrix.models) {
      record.per_model_mean[m] = means.at({q, m});
      record.per_model_z[m] = z.at({q, m});
    }
    record.difficulty = diff.at(q);
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<std::string> filter_by_difficulty(
    const std::vector<DifficultyRecord>& records, double keep_fraction) {
  if (records.empty()) throw CalibrationError("no difficulty records");
  if (keep_fraction <= 0.0 || keep_fraction > 1.0)
    throw CalibrationError("keep_fraction must be in (0,1]");

  std::vector<const DifficultyRecord*> sorted;
  sorted.reserve(records.size());
  for (const DifficultyRecord& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const DifficultyRecord* a, const DifficultyRecord* b) {
              if (a->difficulty != b->difficulty)
                return a->difficulty > b->difficulty;
              return a->question < b->question;
            });

  const auto keep = static_cast<std::size_t>(
      std::ceil(keep_fraction * static_cast<double>(records.size())));
  std::vector<std::string> retained;
  retained.reserve(keep);
  for (std::size_t i = 0; i < keep && i < sorted.size(); ++i)
    retained.push_back(sorted[i]->question);
  return retained;
}

}  // namespace repoqa::calibration
