#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace forge {

// C x C counts, rows = ground truth, columns = prediction.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int classes, std::vector<std::string> names = {})
      : classes_(classes), names_(std::move(names)),
        counts_(static_cast<std::size_t>(classes) * static_cast<std::size_t>(classes), 0) {
    if (classes < 1) throw std::invalid_argument("confusion: classes < 1");
    if (names_.empty()) {
      for (int c = 0; c < classes; ++c) names_.push_back("class" + std::to_string(c));
    }
    if (static_cast<int>(names_.size()) != classes) {
      throw std::invalid_argument("confusion: name count mismatch");
    }
  }

  int classes() const { return classes_; }
  const std::vector<std::string>& names() const { return names_; }

  std::uint64_t& at(int truth, int pred) {
    return counts_[static_cast<std::size_t>(truth) * static_cast<std::size_t>(classes_) +
                   static_cast<std::size_t>(pred)];
  }
  std::uint64_t at(int truth, int pred) const {
    return counts_[static_cast<std::size_t>(truth) * static_cast<std::size_t>(classes_) +
                   static_cast<std::size_t>(pred)];
  }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (std::uint64_t c : counts_) t += c;
    return t;
  }
  std::uint64_t trace() const {
    std::uint64_t t = 0;
    for (int c = 0; c < classes_; ++c) t += at(c, c);
    return t;
  }
  std::uint64_t row_sum(int truth) const {
    std::uint64_t t = 0;
    for (int p = 0; p < classes_; ++p) t += at(truth, p);
    return t;
  }
  std::uint64_t col_sum(int pred) const {
    std::uint64_t t = 0;
    for (int r = 0; r < classes_; ++r) t += at(r, pred);
    return t;
  }

  // Elementwise merge of disjoint sample sets.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
    if (other.classes_ != classes_) throw std::invalid_argument("confusion: size mismatch");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
  }

 private:
  int classes_ = 0;
  std::vector<std::string> names_;
  std::vector<std::uint64_t> counts_;
};

inline ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& pred,
                                 int classes, std::vector<std::string> names = {}) {
  if (truth.size() != pred.size()) {
    throw std::invalid_argument("confusion: truth/pred length mismatch");
  }
  ConfusionMatrix m(classes, std::move(names));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= classes || pred[i] < 0 || pred[i] >= classes) {
      throw std::invalid_argument("confusion: label out of range at sample " + std::to_string(i));
    }
    ++m.at(truth[i], pred[i]);
  }
  return m;
}

inline double overall_accuracy(const ConfusionMatrix& m) {
  const std::uint64_t total = m.total();
  if (total == 0) throw std::domain_error("overall_accuracy: empty matrix");
  return static_cast<double>(m.trace()) / static_cast<double>(total);
}

// Mean row recall; classes with empty rows are excluded from the mean.
inline double class_avg_accuracy(const ConfusionMatrix& m) {
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < m.classes(); ++c) {
    const std::uint64_t row = m.row_sum(c);
    if (row == 0) continue;
    sum += static_cast<double>(m.at(c, c)) / static_cast<double>(row);
    ++counted;
  }
  if (counted == 0) throw std::domain_error("class_avg_accuracy: all rows empty");
  return sum / static_cast<double>(counted);
}

// Mean of TP / (TP + FP + FN) per class; zero-union classes excluded.
inline double mean_iou(const ConfusionMatrix& m) {
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < m.classes(); ++c) {
    const std::uint64_t tp = m.at(c, c);
    const std::uint64_t uni = m.row_sum(c) + m.col_sum(c) - tp;
    if (uni == 0) continue;
    sum += static_cast<double>(tp) / static_cast<double>(uni);
    ++counted;
  }
  if (counted == 0) throw std::domain_error("mean_iou: all unions zero");
  return sum / static_cast<double>(counted);
}

// mIoU averaged over per-chunk matrices instead of the global matrix. Kept
// as a diagnostic convention; the global one above is canonical.
inline double mean_iou_chunked(const std::vector<ConfusionMatrix>& chunks) {
  if (chunks.empty()) throw std::domain_error("mean_iou_chunked: no chunks");
  double sum = 0.0;
  for (const auto& m : chunks) sum += mean_iou(m);
  return sum / static_cast<double>(chunks.size());
}

// Sum counts into superclass cells. `mapping[c]` is the superclass of class
// c and must be total over [0, classes).
inline ConfusionMatrix collapse(const ConfusionMatrix& m, const std::vector<int>& mapping,
                                std::vector<std::string> super_names = {}) {
  if (static_cast<int>(mapping.size()) != m.classes()) {
    throw std::invalid_argument("collapse: mapping not total");
  }
  int super_count = 0;
  for (int s : mapping) {
    if (s < 0) throw std::invalid_argument("collapse: negative superclass");
    super_count = std::max(super_count, s + 1);
  }
  ConfusionMatrix out(super_count, std::move(super_names));
  for (int t = 0; t < m.classes(); ++t) {
    for (int p = 0; p < m.classes(); ++p) {
      out.at(mapping[static_cast<std::size_t>(t)], mapping[static_cast<std::size_t>(p)]) +=
          m.at(t, p);
    }
  }
  return out;
}

inline nlohmann::json metrics_report(const ConfusionMatrix& m) {
  nlohmann::json j;
  j["classes"] = m.names();
  j["total"] = m.total();
  nlohmann::json rows = nlohmann::json::array();
  for (int t = 0; t < m.classes(); ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (int p = 0; p < m.classes(); ++p) row.push_back(m.at(t, p));
    rows.push_back(row);
  }
  j["confusion"] = rows;
  j["overall_accuracy"] = overall_accuracy(m);
  j["class_avg_accuracy"] = class_avg_accuracy(m);
  j["mean_iou"] = mean_iou(m);
  return j;
}

}  // namespace forge
