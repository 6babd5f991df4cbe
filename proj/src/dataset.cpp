#include "opau/dataset.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace opau {
namespace {

constexpr std::uint32_t idx_image_magic = 0x00000803;
constexpr std::uint32_t idx_label_magic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path,
                        const char* what) {
  unsigned char raw[4];
  if (!in.read(reinterpret_cast<char*>(raw), 4))
    throw std::runtime_error(path + ": truncated " + what);
  return (std::uint32_t(raw[0]) << 24) | (std::uint32_t(raw[1]) << 16) |
         (std::uint32_t(raw[2]) << 8) | std::uint32_t(raw[3]);
}

std::ifstream open_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

void DatasetBatch::validate() const {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows())
    throw std::invalid_argument("dataset: one label required per feature row");
  if (!features.allFinite())
    throw std::invalid_argument("dataset: non-finite feature value");
  for (int label : labels)
    if (label < 0 || label >= num_classes)
      throw std::invalid_argument("dataset: label " + std::to_string(label) +
                                  " outside [0, " + std::to_string(num_classes) + ")");
}

DatasetBatch load_idx(const std::string& images_path,
                      const std::string& labels_path, int num_classes) {
  std::ifstream img = open_binary(images_path);
  const std::uint32_t img_magic = read_be32(img, images_path, "header");
  if (img_magic != idx_image_magic)
    throw std::runtime_error(images_path + ": bad IDX image magic " +
                             std::to_string(img_magic));
  const std::uint32_t count = read_be32(img, images_path, "header");
  const std::uint32_t rows = read_be32(img, images_path, "header");
  const std::uint32_t cols = read_be32(img, images_path, "header");
  const std::size_t dim = std::size_t(rows) * cols;

  std::vector<unsigned char> pixels(std::size_t(count) * dim);
  if (!img.read(reinterpret_cast<char*>(pixels.data()),
                static_cast<std::streamsize>(pixels.size())))
    throw std::runtime_error(images_path + ": truncated pixel payload");

  std::ifstream lab = open_binary(labels_path);
  const std::uint32_t lab_magic = read_be32(lab, labels_path, "header");
  if (lab_magic != idx_label_magic)
    throw std::runtime_error(labels_path + ": bad IDX label magic " +
                             std::to_string(lab_magic));
  const std::uint32_t lab_count = read_be32(lab, labels_path, "header");
  if (lab_count != count)
    throw std::runtime_error(labels_path + ": label count " +
                             std::to_string(lab_count) + " != image count " +
                             std::to_string(count));
  std::vector<unsigned char> raw_labels(lab_count);
  if (!lab.read(reinterpret_cast<char*>(raw_labels.data()),
                static_cast<std::streamsize>(raw_labels.size())))
    throw std::runtime_error(labels_path + ": truncated label payload");

  DatasetBatch data;
  data.num_classes = num_classes;
  data.features.resize(count, static_cast<Eigen::Index>(dim));
  data.labels.resize(count);
  for (std::uint32_t s = 0; s < count; ++s) {
    for (std::size_t p = 0; p < dim; ++p)
      data.features(s, static_cast<Eigen::Index>(p)) = pixels[s * dim + p] / 255.0;
    const int label = raw_labels[s];
    if (label >= num_classes)
      throw std::runtime_error(labels_path + ": label " + std::to_string(label) +
                               " out of range for " + std::to_string(num_classes) +
                               " classes");
    data.labels[s] = label;
  }
  data.validate();
  return data;
}

DatasetBatch load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": missing CSV header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  int label_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == label_column) label_col = static_cast<int>(i);
  if (label_col < 0)
    throw std::runtime_error(path + ": no column named '" + label_column + "'");
  const int dim = static_cast<int>(header.size()) - 1;

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  int max_label = -1;
  for (int line_no = 2; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != static_cast<int>(header.size()))
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected " + std::to_string(header.size()) +
                               " cells, got " + std::to_string(cells.size()));
    std::vector<double> feat;
    feat.reserve(static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::size_t used = 0;
      double value;
      try {
        value = std::stod(cells[i], &used);
      } catch (const std::exception&) {
        used = 0;
        value = 0.0;
      }
      if (used != cells[i].size())
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": cannot parse '" + cells[i] + "'");
      if (static_cast<int>(i) == label_col) {
        const int label = static_cast<int>(value);
        if (value != label || label < 0)
          throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                   ": label must be a non-negative integer");
        labels.push_back(label);
        max_label = std::max(max_label, label);
      } else {
        feat.push_back(value);
      }
    }
    rows.push_back(std::move(feat));
  }

  DatasetBatch data;
  data.num_classes = max_label + 1;
  data.features.resize(static_cast<Eigen::Index>(rows.size()), dim);
  data.labels = std::move(labels);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < dim; ++c)
      data.features(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
  data.validate();
  return data;
}

std::vector<DatasetBatch> split_batches(const DatasetBatch& data, int batch_size) {
  if (batch_size < 1)
    throw std::invalid_argument("split_batches: batch size must be >= 1");
  std::vector<DatasetBatch> batches;
  for (Eigen::Index start = 0; start < data.size(); start += batch_size) {
    const Eigen::Index n = std::min<Eigen::Index>(batch_size, data.size() - start);
    DatasetBatch b;
    b.num_classes = data.num_classes;
    b.features = data.features.middleRows(start, n);
    b.labels.assign(data.labels.begin() + start, data.labels.begin() + start + n);
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace opau
