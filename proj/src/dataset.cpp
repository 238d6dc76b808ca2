#include "dataset.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "error.hpp"
#include "rng.hpp"

namespace cobras {

Dataset::Dataset(std::vector<double> values, std::size_t dim,
                 std::optional<std::vector<int>> labels,
                 std::vector<std::string> feature_names,
                 std::vector<std::string> class_names)
    : values_(std::move(values)),
      dim_(dim),
      labels_(std::move(labels)),
      feature_names_(std::move(feature_names)),
      class_names_(std::move(class_names)) {
  if (dim_ == 0 && !values_.empty())
    throw Error(ErrorCode::InvalidArgument, "dataset dimension must be positive");
  if (dim_ != 0 && values_.size() % dim_ != 0)
    throw Error(ErrorCode::InvalidArgument,
                "value count is not a multiple of the dimension");
  if (labels_) {
    if (labels_->size() != size())
      throw Error(ErrorCode::InvalidArgument, "label count does not match instance count");
    for (int l : *labels_)
      if (l < 0) throw Error(ErrorCode::InvalidArgument, "labels must be non-negative");
  }
  if (!feature_names_.empty() && feature_names_.size() != dim_)
    throw Error(ErrorCode::InvalidArgument, "feature name count does not match dimension");
}

const std::vector<int>& Dataset::labels() const {
  if (!labels_) throw Error(ErrorCode::InvalidArgument, "dataset has no labels");
  return *labels_;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path,
                 std::optional<std::string> label_column) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCode::Parse, path.string() + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  std::optional<std::size_t> label_idx;
  if (label_column) {
    auto it = std::find(header.begin(), header.end(), *label_column);
    if (it == header.end())
      throw Error(ErrorCode::InvalidArgument,
                  path.string() + ": no column named '" + *label_column + "'");
    label_idx = static_cast<std::size_t>(it - header.begin());
  } else if (auto it = std::find(header.begin(), header.end(), "class");
             it != header.end()) {
    label_idx = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != label_idx) feature_names.push_back(header[c]);
  const std::size_t dim = feature_names.size();
  if (dim == 0) throw Error(ErrorCode::Parse, path.string() + ": no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::unordered_map<std::string, int> class_ids;

  std::size_t row = 1;  // 1-based file line of the current record
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      std::ostringstream msg;
      msg << path.string() << ":" << row << ": expected " << header.size()
          << " cells, found " << cells.size();
      throw Error(ErrorCode::Parse, msg.str());
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::string cell = trim(cells[c]);
      if (c == label_idx) {
        auto [it, inserted] = class_ids.try_emplace(cell, static_cast<int>(class_names.size()));
        if (inserted) class_names.push_back(cell);
        labels.push_back(it->second);
        continue;
      }
      double v = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        std::ostringstream msg;
        msg << path.string() << ":" << row << ": column '" << header[c]
            << "' value '" << cell << "' is not a finite number";
        throw Error(ErrorCode::Parse, msg.str());
      }
      values.push_back(v);
    }
  }
  if (values.empty()) throw Error(ErrorCode::Parse, path.string() + ": no data rows");

  std::optional<std::vector<int>> maybe_labels;
  if (label_idx) maybe_labels = std::move(labels);
  return Dataset(std::move(values), dim, std::move(maybe_labels), std::move(feature_names),
                 label_idx ? std::move(class_names) : std::vector<std::string>{});
}

Dataset deduplicate(const Dataset& ds) {
  struct RowHash {
    const Dataset* ds;
    std::size_t operator()(Index i) const {
      std::size_t h = 0;
      for (double v : ds->row(i)) {
        std::uint64_t bits;
        double normalized = v == 0.0 ? 0.0 : v;  // +0 and -0 compare equal
        std::memcpy(&bits, &normalized, sizeof bits);
        h = static_cast<std::size_t>(splitmix64(h ^ bits));
      }
      return h;
    }
  };
  struct RowEq {
    const Dataset* ds;
    bool operator()(Index a, Index b) const {
      auto ra = ds->row(a);
      auto rb = ds->row(b);
      return std::equal(ra.begin(), ra.end(), rb.begin());
    }
  };
  std::unordered_set<Index, RowHash, RowEq> seen(ds.size(), RowHash{&ds}, RowEq{&ds});

  std::vector<double> values;
  std::vector<int> labels;
  for (Index i = 0; i < ds.size(); ++i) {
    if (!seen.insert(i).second) continue;
    auto r = ds.row(i);
    values.insert(values.end(), r.begin(), r.end());
    if (ds.has_labels()) labels.push_back(ds.label(i));
  }
  std::optional<std::vector<int>> maybe_labels;
  if (ds.has_labels()) maybe_labels = std::move(labels);
  return Dataset(std::move(values), ds.dim(), std::move(maybe_labels), ds.feature_names(),
                 ds.class_names());
}

Dataset normalize(const Dataset& ds) {
  const std::size_t n = ds.size();
  const std::size_t d = ds.dim();
  std::vector<double> lo(d, 0.0), hi(d, 0.0);
  for (std::size_t c = 0; c < d && n > 0; ++c) {
    lo[c] = hi[c] = ds.row(0)[c];
    for (Index i = 1; i < n; ++i) {
      lo[c] = std::min(lo[c], ds.row(i)[c]);
      hi[c] = std::max(hi[c], ds.row(i)[c]);
    }
  }
  std::vector<double> values(ds.values().begin(), ds.values().end());
  for (Index i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      double& v = values[i * d + c];
      const double range = hi[c] - lo[c];
      v = range > 0.0 ? std::clamp((v - lo[c]) / range, 0.0, 1.0) : 0.0;
    }
  }
  std::optional<std::vector<int>> labels;
  if (ds.has_labels()) labels = ds.labels();
  return Dataset(std::move(values), d, std::move(labels), ds.feature_names(),
                 ds.class_names());
}

std::vector<bool> FoldAssignment::train_mask(int f) const {
  std::vector<bool> mask(fold_of.size());
  for (std::size_t i = 0; i < fold_of.size(); ++i) mask[i] = fold_of[i] != f;
  return mask;
}

std::vector<bool> FoldAssignment::test_mask(int f) const {
  std::vector<bool> mask(fold_of.size());
  for (std::size_t i = 0; i < fold_of.size(); ++i) mask[i] = fold_of[i] == f;
  return mask;
}

std::vector<FoldAssignment> make_folds(const Dataset& ds, int repetitions, int folds,
                                       std::uint64_t seed) {
  if (!ds.has_labels())
    throw Error(ErrorCode::InvalidArgument, "fold generation requires labels");
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 folds");
  if (repetitions < 1) throw Error(ErrorCode::InvalidArgument, "need at least 1 repetition");
  if (ds.size() < static_cast<std::size_t>(folds))
    throw Error(ErrorCode::InvalidArgument, "fewer instances than folds");

  std::map<int, std::vector<Index>> by_class;
  for (Index i = 0; i < ds.size(); ++i) by_class[ds.label(i)].push_back(i);

  std::vector<FoldAssignment> out;
  for (int r = 0; r < repetitions; ++r) {
    FoldAssignment fa;
    fa.repetition = r;
    fa.folds = folds;
    fa.seed = derive_seed(seed, Stream::Folds, static_cast<std::uint64_t>(r));
    fa.fold_of.assign(ds.size(), -1);
    std::mt19937_64 rng(fa.seed);
    // Deal each shuffled class round-robin, continuing where the previous class
    // stopped so overall fold sizes stay balanced as well.
    int next = 0;
    for (const auto& [cls, members] : by_class) {
      std::vector<Index> shuffled = members;
      for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[rng() % i]);
      for (Index idx : shuffled) {
        fa.fold_of[idx] = next;
        next = (next + 1) % folds;
      }
    }
    out.push_back(std::move(fa));
  }
  return out;
}

std::vector<std::array<double, 2>> pca_projection(const Dataset& ds) {
  const auto n = static_cast<Eigen::Index>(ds.size());
  const auto d = static_cast<Eigen::Index>(ds.dim());
  std::vector<std::array<double, 2>> out(ds.size(), {0.0, 0.0});
  if (n == 0) return out;

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      ds.values().data(), n, d);
  Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered / std::max<double>(1.0, n - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  // eigenvalues ascending
  const int components = static_cast<int>(std::min<Eigen::Index>(2, d));
  for (int c = 0; c < components; ++c) {
    Eigen::VectorXd axis = solver.eigenvectors().col(d - 1 - c);
    Eigen::Index pivot = 0;
    axis.cwiseAbs().maxCoeff(&pivot);
    if (axis(pivot) < 0) axis = -axis;
    Eigen::VectorXd coords = centered * axis;
    for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)][c] = coords(i);
  }
  return out;
}

}  // namespace cobras
