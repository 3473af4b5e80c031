#include "attnmil/persistence.hpp"

#include <map>
#include <sstream>

#include "attnmil/error.hpp"
#include "attnmil/io.hpp"

namespace attnmil {

namespace {

constexpr std::string_view kMagic = "attnmil-model";

std::string layer_spec(const nn::DenseLayer& layer) {
  return std::to_string(layer.in_dim()) + "x" + std::to_string(layer.out_dim()) + ":" +
         std::string(nn::to_string(layer.activation)) + ":" + io::format_double17(layer.dropout_rate);
}

void put_tensor(std::string& out, const std::string& name, const Matrix& m) {
  out += name + " " + std::to_string(m.rows()) + " " + std::to_string(m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out += ' ';
      out += io::format_double17(m(r, c));
    }
  out += '\n';
}

void put_layer(std::string& out, const std::string& prefix, const nn::DenseLayer& layer) {
  put_tensor(out, prefix + ".weights", layer.weights);
  put_tensor(out, prefix + ".biases", layer.biases);
}

struct LayerShape {
  std::size_t in, out;
  nn::Activation activation;
  double dropout;
};

LayerShape parse_layer_spec(std::string_view spec) {
  auto parts = io::split(spec, ':');
  auto dims = parts.size() == 3 ? io::split(parts[0], 'x') : std::vector<std::string_view>{};
  auto in = dims.size() == 2 ? io::parse_u64(dims[0]) : std::nullopt;
  auto out = dims.size() == 2 ? io::parse_u64(dims[1]) : std::nullopt;
  auto dropout = parts.size() == 3 ? io::parse_double(parts[2]) : std::nullopt;
  if (!in || !out || !dropout) fail("model file: malformed layer spec '" + std::string(spec) + "'");
  return {static_cast<std::size_t>(*in), static_cast<std::size_t>(*out), nn::parse_activation(parts[1]), *dropout};
}

class Reader {
public:
  explicit Reader(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto tokens = io::split(line, ' ');
      if (first) {
        first = false;
        if (tokens.size() < 2 || tokens[0] != kMagic) fail("model file: missing 'attnmil-model' header");
        if (tokens[1] != std::to_string(kModelFormatVersion))
          fail("model file: unsupported format version '" + std::string(tokens[1]) + "'");
        for (std::size_t i = 2; i < tokens.size(); ++i) {
          auto eq = tokens[i].find('=');
          if (eq == std::string_view::npos) fail("model file: malformed header field '" + std::string(tokens[i]) + "'");
          header_[std::string(tokens[i].substr(0, eq))] = std::string(tokens[i].substr(eq + 1));
        }
        continue;
      }
      if (tokens.size() < 3) fail("model file: malformed tensor line");
      auto rows = io::parse_u64(tokens[1]);
      auto cols = io::parse_u64(tokens[2]);
      if (!rows || !cols || tokens.size() != 3 + *rows * *cols)
        fail("model file: tensor '" + std::string(tokens[0]) + "' has a bad shape or value count");
      Matrix m(static_cast<Eigen::Index>(*rows), static_cast<Eigen::Index>(*cols));
      std::size_t t = 3;
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          auto v = io::parse_double(tokens[t++]);
          if (!v) fail("model file: tensor '" + std::string(tokens[0]) + "' has a non-numeric value");
          m(r, c) = *v;
        }
      tensors_[std::string(tokens[0])] = std::move(m);
    }
    if (first) fail("model file: empty");
  }

  const std::string& field(const std::string& key) const {
    auto it = header_.find(key);
    if (it == header_.end()) fail("model file: header lacks '" + key + "'");
    return it->second;
  }
  bool has_field(const std::string& key) const { return header_.count(key) != 0; }
  std::size_t count_field(const std::string& key) const {
    auto v = io::parse_u64(field(key));
    if (!v) fail("model file: header field '" + key + "' is not a count");
    return static_cast<std::size_t>(*v);
  }

  Matrix tensor(const std::string& name, Eigen::Index rows, Eigen::Index cols) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) fail("model file: missing tensor '" + name + "'");
    if (it->second.rows() != rows || it->second.cols() != cols)
      fail("model file: tensor '" + name + "' does not match the header's shape");
    return it->second;
  }
  bool has_tensor(const std::string& name) const { return tensors_.count(name) != 0; }

  nn::DenseLayer layer(const std::string& prefix, const LayerShape& shape) const {
    nn::DenseLayer layer;
    layer.weights = tensor(prefix + ".weights", static_cast<Eigen::Index>(shape.out), static_cast<Eigen::Index>(shape.in));
    layer.biases = tensor(prefix + ".biases", static_cast<Eigen::Index>(shape.out), 1);
    layer.activation = shape.activation;
    layer.dropout_rate = shape.dropout;
    return layer;
  }

  nn::LayerStack stack(const std::string& key) const {
    nn::LayerStack stack;
    std::size_t i = 0;
    for (auto spec : io::split(field(key), ','))
      stack.layers.push_back(layer(key + "." + std::to_string(i++), parse_layer_spec(spec)));
    return stack;
  }

private:
  std::map<std::string, std::string> header_;
  std::map<std::string, Matrix> tensors_;
};

std::string stack_spec(const nn::LayerStack& stack) {
  std::string out;
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    if (i) out += ',';
    out += layer_spec(stack.layers[i]);
  }
  return out;
}

void put_stack(std::string& out, const std::string& prefix, const nn::LayerStack& stack) {
  for (std::size_t i = 0; i < stack.layers.size(); ++i) put_layer(out, prefix + "." + std::to_string(i), stack.layers[i]);
}

}  // namespace

std::string format_model(const ModelFile& file) {
  std::string header = std::string(kMagic) + " " + std::to_string(kModelFormatVersion) +
                       " kind=" + std::string(to_string(method_of(file.model))) +
                       " feature_dim=" + std::to_string(feature_dim(file.model));
  std::string body;
  if (const auto* m = std::get_if<AttentionMilModel>(&file.model)) {
    header += " transform=" + stack_spec(m->transform);
    header += " attention=" + std::to_string(m->attention.hidden.rows()) + "x" + std::to_string(m->attention.hidden.cols());
    header += " head=" + layer_spec(m->head);
    header += " pad_target=" + std::to_string(m->pad_target);
    put_stack(body, "transform", m->transform);
    put_tensor(body, "attention.hidden", m->attention.hidden);
    put_tensor(body, "attention.projection", m->attention.projection);
    put_layer(body, "head", m->head);
  } else if (const auto* m = std::get_if<MiNetModel>(&file.model)) {
    header += " transform=" + stack_spec(m->transform);
    header += " head=" + layer_spec(m->head);
    header += " pooling=" + std::string(to_string(m->pooling));
    header += " pad_target=" + std::to_string(m->pad_target);
    put_stack(body, "transform", m->transform);
    put_layer(body, "head", m->head);
  } else {
    const auto& svm = std::get<MiSvmModel>(file.model);
    header += " lambda=" + io::format_double17(svm.lambda);
    put_tensor(body, "svm.weights", svm.weights);
    Matrix bias(1, 1);
    bias(0, 0) = svm.bias;
    put_tensor(body, "svm.bias", bias);
  }
  header += file.standardizer ? " standardizer=1" : " standardizer=0";
  if (file.standardizer) {
    put_tensor(body, "standardizer.means", file.standardizer->means);
    put_tensor(body, "standardizer.stds", file.standardizer->stds);
  }
  return header + "\n" + body;
}

ModelFile parse_model(std::string_view text) {
  Reader reader(text);
  const auto method = parse_method(reader.field("kind"));
  const auto dim = reader.count_field("feature_dim");
  ModelFile file;
  switch (method) {
    case Method::attention_mil: {
      AttentionMilModel m;
      m.transform = reader.stack("transform");
      auto shape = io::split(reader.field("attention"), 'x');
      auto rows = shape.size() == 2 ? io::parse_u64(shape[0]) : std::nullopt;
      auto cols = shape.size() == 2 ? io::parse_u64(shape[1]) : std::nullopt;
      if (!rows || !cols) fail("model file: malformed attention shape");
      m.attention.hidden = reader.tensor("attention.hidden", static_cast<Eigen::Index>(*rows), static_cast<Eigen::Index>(*cols));
      m.attention.projection = reader.tensor("attention.projection", static_cast<Eigen::Index>(*rows), 1);
      m.head = reader.layer("head", parse_layer_spec(reader.field("head")));
      m.pad_target = reader.count_field("pad_target");
      m.validate();
      file.model = std::move(m);
      break;
    }
    case Method::mi_net: {
      MiNetModel m;
      m.transform = reader.stack("transform");
      m.head = reader.layer("head", parse_layer_spec(reader.field("head")));
      m.pooling = parse_pooling(reader.field("pooling"));
      m.pad_target = reader.count_field("pad_target");
      m.validate();
      file.model = std::move(m);
      break;
    }
    case Method::mi_svm: {
      MiSvmModel m;
      auto lambda = io::parse_double(reader.field("lambda"));
      if (!lambda) fail("model file: malformed lambda");
      m.lambda = *lambda;
      m.weights = reader.tensor("svm.weights", static_cast<Eigen::Index>(dim), 1);
      m.bias = reader.tensor("svm.bias", 1, 1)(0, 0);
      m.validate();
      file.model = std::move(m);
      break;
    }
  }
  if (feature_dim(file.model) != dim) fail("model file: feature_dim does not match the stored tensors");
  if (reader.field("standardizer") == "1") {
    Standardizer s;
    s.means = reader.tensor("standardizer.means", static_cast<Eigen::Index>(dim), 1);
    s.stds = reader.tensor("standardizer.stds", static_cast<Eigen::Index>(dim), 1);
    file.standardizer = std::move(s);
  }
  return file;
}

void save_model(const std::filesystem::path& path, const ModelFile& file) {
  io::write_file_atomic(path, format_model(file));
}

ModelFile load_model(const std::filesystem::path& path) { return parse_model(io::read_file(path)); }

}  // namespace attnmil
