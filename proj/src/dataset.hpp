#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cobras {

using Index = std::size_t;

/// Row-major feature matrix with optional integer class labels.
///
/// Values are immutable once constructed; every transformation returns a new
/// Dataset, so instances can be shared read-only between sessions.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<double> values, std::size_t dim,
          std::optional<std::vector<int>> labels = std::nullopt,
          std::vector<std::string> feature_names = {},
          std::vector<std::string> class_names = {});

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return size() == 0; }

  std::span<const double> row(Index i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<const double> values() const noexcept { return values_; }

  bool has_labels() const noexcept { return labels_.has_value(); }
  const std::vector<int>& labels() const;
  int label(Index i) const { return labels().at(i); }

  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  // Original label strings, indexed by class id. Empty when labels came in as ids.
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }

 private:
  std::vector<double> values_;
  std::size_t dim_ = 0;
  std::optional<std::vector<int>> labels_;
  std::vector<std::string> feature_names_;
  std::vector<std::string> class_names_;
};

/// Parses a headered, comma-separated file. When `label_column` is unset a
/// column named `class` is used as the label if present. Label strings are
/// mapped to ids in order of first appearance.
Dataset load_csv(const std::filesystem::path& path,
                 std::optional<std::string> label_column = std::nullopt);

// Keeps the first occurrence of every distinct feature vector (exact compare).
Dataset deduplicate(const Dataset& ds);

// Per-feature min-max scaling into [0,1]; constant features become 0.
Dataset normalize(const Dataset& ds);

struct FoldAssignment {
  std::vector<int> fold_of;
  int repetition = 0;
  int folds = 0;
  std::uint64_t seed = 0;

  // true for instances outside fold `f`
  std::vector<bool> train_mask(int f) const;
  std::vector<bool> test_mask(int f) const;
};

/// Stratified fold assignment, one per repetition. Deterministic in `seed`.
std::vector<FoldAssignment> make_folds(const Dataset& ds, int repetitions,
                                       int folds, std::uint64_t seed);

// First two principal components of the features, for display.
std::vector<std::array<double, 2>> pca_projection(const Dataset& ds);

}  // namespace cobras
