#include "fairfl/model.hpp"

namespace fairfl {

nlohmann::json to_json(const ModelWeights& w) {
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (const auto& l : w.layers) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat.push_back(l.weight(r, c));
    weights.push_back(flat);
    biases.push_back(std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size()));
  }
  return {{"layer_dims", w.dims()}, {"weights", weights}, {"biases", biases}};
}

ModelWeights model_from_json(const nlohmann::json& j) {
  const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  require(dims.size() >= 2 && weights.size() == dims.size() - 1 && biases.size() == weights.size(),
          "model json: layer count mismatch");
  ModelWeights w;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(dims[l]);
    const auto out = static_cast<Eigen::Index>(dims[l + 1]);
    const auto flat = weights[l].get<std::vector<double>>();
    const auto bias = biases[l].get<std::vector<double>>();
    require(flat.size() == static_cast<std::size_t>(in * out) &&
                bias.size() == static_cast<std::size_t>(out),
            "model json: coefficient count mismatch");
    DenseLayer<double> layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c)
        layer.weight(r, c) = flat[static_cast<std::size_t>(r * in + c)];
    for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = bias[static_cast<std::size_t>(r)];
    w.layers.push_back(std::move(layer));
  }
  w.validate();
  return w;
}

}  // namespace fairfl
