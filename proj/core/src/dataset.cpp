#include "attnmil/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "attnmil/error.hpp"
#include "attnmil/io.hpp"

namespace attnmil {

std::size_t Bag::original_size() const {
  if (padding.empty()) return size();
  return static_cast<std::size_t>(std::count(padding.begin(), padding.end(), false));
}

bool Bag::operator==(const Bag& other) const {
  return id == other.id && label == other.label && padding == other.padding &&
         instances.rows() == other.instances.rows() && instances.cols() == other.instances.cols() &&
         instances == other.instances;
}

std::size_t MilDataset::count_label(int label) const {
  return static_cast<std::size_t>(
      std::count_if(bags.begin(), bags.end(), [label](const Bag& b) { return b.label == label; }));
}

const Bag* MilDataset::find(const std::string& id) const {
  for (const auto& bag : bags)
    if (bag.id == id) return &bag;
  return nullptr;
}

void MilDataset::validate() const {
  require(feature_dim > 0, "dataset: feature dimension must be positive");
  require(feature_names.empty() || feature_names.size() == feature_dim,
          "dataset: feature name count does not match feature dimension");
  std::set<std::string> seen;
  for (const auto& bag : bags) {
    require(seen.insert(bag.id).second, "dataset: duplicate bag id '" + bag.id + "'");
    require(bag.size() >= 1, "dataset: bag '" + bag.id + "' has no instances");
    require(bag.dim() == feature_dim, "dataset: bag '" + bag.id + "' has wrong feature dimension");
    require(bag.label == 0 || bag.label == 1, "dataset: bag '" + bag.id + "' has a non-binary label");
    require(bag.instances.allFinite(), "dataset: bag '" + bag.id + "' has non-finite features");
  }
}

MilDataset load_dataset(const std::filesystem::path& path, std::optional<std::size_t> feature_dim) {
  const std::string text = io::read_file(path);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };

  const std::string where = path.string();
  if (!next_line()) fail(where + ": empty file, expected header 'bag_id,label,f0,...'");
  auto header = io::split(line, ',');
  if (header.size() < 3 || header[0] != "bag_id" || header[1] != "label")
    fail(where + ": header must start with 'bag_id,label' followed by feature columns");
  const std::size_t dim = header.size() - 2;
  if (feature_dim && *feature_dim != dim)
    fail(where + ": header declares " + std::to_string(dim) + " features, expected " +
         std::to_string(*feature_dim));

  MilDataset dataset;
  dataset.feature_dim = dim;
  for (std::size_t j = 0; j < dim; ++j) dataset.feature_names.emplace_back(header[j + 2]);

  struct Pending {
    int label;
    std::vector<std::vector<double>> rows;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Pending> pending;

  while (next_line()) {
    auto cells = io::split(line, ',');
    const std::string row = where + ": row " + std::to_string(line_no);
    if (cells.size() != dim + 2)
      fail(row + ": expected " + std::to_string(dim + 2) + " cells, found " +
           std::to_string(cells.size()));
    std::string id(cells[0]);
    if (id.empty()) fail(row + ": missing bag_id");
    int label;
    if (cells[1] == "0")
      label = 0;
    else if (cells[1] == "1")
      label = 1;
    else
      fail(row + ": label must be 0 or 1");

    std::vector<double> features(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      auto value = io::parse_double(cells[j + 2]);
      if (!value || !std::isfinite(*value))
        fail(row + ": feature column " + std::to_string(j) + " is missing or not a finite number");
      features[j] = *value;
    }

    auto [it, inserted] = pending.try_emplace(id, Pending{label, {}});
    if (inserted) order.push_back(id);
    if (it->second.label != label) fail(where + ": bag '" + id + "' has conflicting labels");
    it->second.rows.push_back(std::move(features));
  }
  if (order.empty()) fail(where + ": no instance rows");

  dataset.bags.reserve(order.size());
  for (const auto& id : order) {
    auto& entry = pending.at(id);
    Bag bag;
    bag.id = id;
    bag.label = entry.label;
    bag.instances.resize(static_cast<Eigen::Index>(entry.rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < entry.rows.size(); ++r)
      for (std::size_t j = 0; j < dim; ++j)
        bag.instances(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = entry.rows[r][j];
    dataset.bags.push_back(std::move(bag));
  }
  return dataset;
}

std::string format_dataset(const MilDataset& dataset) {
  std::string out = "bag_id,label";
  for (std::size_t j = 0; j < dataset.feature_dim; ++j) {
    out += ',';
    out += dataset.feature_names.empty() ? "f" + std::to_string(j) : dataset.feature_names[j];
  }
  out += '\n';
  for (const auto& bag : dataset.bags) {
    for (Eigen::Index r = 0; r < bag.instances.rows(); ++r) {
      out += bag.id;
      out += bag.label ? ",1" : ",0";
      for (Eigen::Index j = 0; j < bag.instances.cols(); ++j) {
        out += ',';
        out += io::format_double(bag.instances(r, j));
      }
      out += '\n';
    }
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const MilDataset& dataset) {
  io::write_file_atomic(path, format_dataset(dataset));
}

std::filesystem::path witness_sidecar_path(const std::filesystem::path& dataset_path) {
  auto meta = dataset_path;
  meta.replace_extension(".meta");
  return meta;
}

std::string format_witnesses(const MilDataset& dataset) {
  std::string out = "bag_id,witness_index\n";
  // Dataset order, not map order, so the sidecar lines up with the data file.
  for (const auto& bag : dataset.bags) {
    auto it = dataset.witnesses.find(bag.id);
    if (it == dataset.witnesses.end()) continue;
    for (auto index : it->second) out += bag.id + "," + std::to_string(index) + "\n";
  }
  return out;
}

std::map<std::string, std::vector<std::size_t>> load_witnesses(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::string line;
  std::map<std::string, std::vector<std::size_t>> result;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line == "bag_id,witness_index") continue;
    }
    auto cells = io::split(line, ',');
    auto index = cells.size() == 2 ? io::parse_u64(cells[1]) : std::nullopt;
    if (!index) fail(path.string() + ": malformed witness line '" + line + "'");
    result[std::string(cells[0])].push_back(static_cast<std::size_t>(*index));
  }
  return result;
}

Standardizer Standardizer::identity(std::size_t dim) {
  return {Vector::Zero(static_cast<Eigen::Index>(dim)), Vector::Ones(static_cast<Eigen::Index>(dim))};
}

Standardizer fit_standardizer(std::span<const Bag> train_bags) {
  std::size_t total = 0;
  for (const auto& bag : train_bags) total += bag.size();
  require(total > 0, "fit_standardizer: no training instances");
  const auto dim = train_bags.front().instances.cols();

  Vector sum = Vector::Zero(dim);
  for (const auto& bag : train_bags) {
    require(bag.instances.cols() == dim, "fit_standardizer: bags disagree on feature dimension");
    sum += bag.instances.colwise().sum().transpose();
  }
  Standardizer s;
  s.means = sum / static_cast<double>(total);

  Vector squares = Vector::Zero(dim);
  for (const auto& bag : train_bags)
    squares += (bag.instances.rowwise() - s.means.transpose()).array().square().colwise().sum().matrix().transpose();

  s.stds = Vector::Ones(dim);
  if (total > 1) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      double sd = std::sqrt(squares[j] / static_cast<double>(total - 1));
      s.stds[j] = sd < Standardizer::kVarianceFloor ? 1.0 : sd;
    }
  }
  return s;
}

Bag apply_standardizer(const Standardizer& standardizer, const Bag& bag) {
  require(static_cast<std::size_t>(bag.instances.cols()) == standardizer.dim(),
          "apply_standardizer: bag '" + bag.id + "' has dimension " + std::to_string(bag.dim()) +
              ", standardizer expects " + std::to_string(standardizer.dim()));
  Bag out = bag;
  out.instances = ((bag.instances.rowwise() - standardizer.means.transpose()).array().rowwise() /
                   standardizer.stds.transpose().array())
                      .matrix();
  return out;
}

std::vector<Bag> apply_standardizer(const Standardizer& standardizer, std::span<const Bag> bags) {
  std::vector<Bag> out;
  out.reserve(bags.size());
  for (const auto& bag : bags) out.push_back(apply_standardizer(standardizer, bag));
  return out;
}

Bag pad_bag_duplicate(const Bag& bag, std::size_t target_size) {
  require(bag.size() >= 1, "pad_bag_duplicate: bag '" + bag.id + "' is empty");
  require(bag.padding.empty(), "pad_bag_duplicate: bag '" + bag.id + "' is already padded");
  require(target_size >= bag.size(), "pad_bag_duplicate: bag '" + bag.id + "' has " +
                                         std::to_string(bag.size()) + " instances, more than target " +
                                         std::to_string(target_size));
  Bag out;
  out.id = bag.id;
  out.label = bag.label;
  out.instances.resize(static_cast<Eigen::Index>(target_size), bag.instances.cols());
  out.padding.assign(target_size, false);
  const std::size_t n = bag.size();
  for (std::size_t i = 0; i < target_size; ++i) {
    out.instances.row(static_cast<Eigen::Index>(i)) = bag.instances.row(static_cast<Eigen::Index>(i % n));
    out.padding[i] = i >= n;
  }
  return out;
}

Bag strip_padding(const Bag& bag) {
  Bag out;
  out.id = bag.id;
  out.label = bag.label;
  const auto keep = bag.original_size();
  out.instances.resize(static_cast<Eigen::Index>(keep), bag.instances.cols());
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < bag.size(); ++i)
    if (!bag.is_padding(i)) out.instances.row(r++) = bag.instances.row(static_cast<Eigen::Index>(i));
  return out;
}

void SyntheticSpec::validate() const {
  require(n_pos + n_neg >= 2, "synthetic: need at least two bags in total");
  require(feature_dim >= 1, "synthetic: feature dimension must be positive");
  require(min_bag_size >= 1, "synthetic: minimum bag size must be at least 1");
  require(max_bag_size >= min_bag_size, "synthetic: maximum bag size is below the minimum");
  require(n_signal_dims <= feature_dim, "synthetic: more signal dimensions than features");
  require(n_witnesses >= 1, "synthetic: positive bags need at least one witness");
  require(std::isfinite(witness_shift), "synthetic: witness shift must be finite");
}

MilDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  MilDataset dataset;
  dataset.feature_dim = spec.feature_dim;
  const auto dim = static_cast<Eigen::Index>(spec.feature_dim);
  const std::size_t total = spec.n_pos + spec.n_neg;
  const int width = std::max<int>(4, static_cast<int>(std::to_string(total).size()));

  for (std::size_t b = 0; b < total; ++b) {
    Bag bag;
    std::string number = std::to_string(b);
    bag.id = "bag" + std::string(static_cast<std::size_t>(width) - number.size(), '0') + number;
    bag.label = b < spec.n_pos ? 1 : 0;
    const auto size = static_cast<Eigen::Index>(rng.between(spec.min_bag_size, spec.max_bag_size));
    bag.instances.resize(size, dim);
    for (Eigen::Index r = 0; r < size; ++r)
      for (Eigen::Index j = 0; j < dim; ++j) bag.instances(r, j) = rng.normal();

    if (bag.label == 1) {
      std::vector<std::size_t> slots(static_cast<std::size_t>(size));
      std::iota(slots.begin(), slots.end(), 0);
      const std::size_t count = std::min<std::size_t>(spec.n_witnesses, slots.size());
      // Partial Fisher-Yates: the first `count` slots end up a uniform sample.
      for (std::size_t i = 0; i < count; ++i) {
        auto j = i + static_cast<std::size_t>(rng.below(slots.size() - i));
        std::swap(slots[i], slots[j]);
      }
      slots.resize(count);
      std::sort(slots.begin(), slots.end());
      for (auto slot : slots)
        bag.instances.row(static_cast<Eigen::Index>(slot)).head(static_cast<Eigen::Index>(spec.n_signal_dims))
            .array() += spec.witness_shift;
      dataset.witnesses[bag.id] = std::move(slots);
    }
    dataset.bags.push_back(std::move(bag));
  }
  return dataset;
}

}  // namespace attnmil
