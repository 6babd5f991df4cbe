#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace opau {

/// A set of samples: one feature row per sample, integer class labels.
/// Image data is stored normalized to [0,1].
struct DatasetBatch {
  Eigen::MatrixXd features;  // batch x dim
  std::vector<int> labels;   // length batch
  int num_classes = 0;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }

  /// Enforces the invariants: finite features, one label per row, every
  /// label inside [0, num_classes). Throws std::invalid_argument.
  void validate() const;
};

/// Reads an IDX image/label file pair (big-endian; magic 0x00000803 for
/// count x rows x cols unsigned-byte images, 0x00000801 for labels).
/// Pixels are scaled to [0,1]; images are flattened row-major to one
/// feature row per sample. Bad magic, truncated payloads, image/label
/// count mismatch and out-of-range labels each raise a distinct error.
DatasetBatch load_idx(const std::string& images_path,
                      const std::string& labels_path, int num_classes = 10);

/// Reads a UTF-8 CSV with a header row. `label_column` names the integer
/// label column; every other column is a feature. num_classes is inferred
/// as max(label)+1.
DatasetBatch load_csv(const std::string& path, const std::string& label_column);

/// Splits a dataset into consecutive mini-batches of at most `batch_size`
/// samples, preserving order.
std::vector<DatasetBatch> split_batches(const DatasetBatch& data, int batch_size);

}  // namespace opau
