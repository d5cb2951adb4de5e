#pragma once

#include <json.hpp>

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "shapdec/distributions.hpp"
#include "shapdec/external_model.hpp"
#include "shapdec/models.hpp"

namespace shapdec {

namespace detail {

inline int flatten_node(const nlohmann::json& j, Tree& tree) {
  const int at = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (j.contains("value")) {
    tree.nodes[static_cast<std::size_t>(at)].value = j.at("value").get<double>();
    return at;
  }
  TreeNode node;
  node.feature = j.at("feature").get<int>();
  node.threshold = j.at("threshold").get<double>();
  if (node.feature < 0) throw IngestionError("split feature must be non-negative");
  node.left = flatten_node(j.at("left"), tree);
  node.right = flatten_node(j.at("right"), tree);
  tree.nodes[static_cast<std::size_t>(at)] = node;
  return at;
}

}  // namespace detail

/// Builds a predictor from its JSON form. `n_features` is required for
/// external models (the handshake announces it) and cross-checked for the
/// others when nonzero.
inline PredictorPtr model_from_json(const nlohmann::json& j, std::size_t n_features = 0) {
  PredictorPtr model;
  try {
    if (!j.is_object() || !j.contains("kind")) throw IngestionError("model JSON needs a 'kind' field");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "linear") {
      model = std::make_shared<LinearModel>(detail::vector_from_json(j.at("coefficients")),
                                            j.at("intercept").get<double>());
    } else if (kind == "quadratic") {
      model = std::make_shared<QuadraticModel>(j.at("intercept").get<double>(),
                                               detail::vector_from_json(j.at("linear")),
                                               detail::matrix_from_json(j.at("quadratic")));
    } else if (kind == "tabulated") {
      std::vector<Vector> support;
      for (const auto& row : j.at("support")) support.push_back(detail::vector_from_json(row));
      model = std::make_shared<TabulatedModel>(std::move(support), j.at("outputs").get<std::vector<double>>());
    } else if (kind == "forest") {
      const auto task_name = j.at("task").get<std::string>();
      ForestTask task;
      if (task_name == "regression") task = ForestTask::Regression;
      else if (task_name == "binary-probability") task = ForestTask::BinaryProbability;
      else throw IngestionError("unknown forest task '" + task_name + "'");
      std::vector<Tree> trees;
      for (const auto& t : j.at("trees")) {
        Tree tree;
        detail::flatten_node(t, tree);
        trees.push_back(std::move(tree));
      }
      model = std::make_shared<ForestModel>(j.at("n_features").get<std::size_t>(), task, std::move(trees));
    } else if (kind == "external") {
      if (n_features == 0) throw IngestionError("external model needs the feature count of the data");
      model = std::make_shared<ExternalModel>(j.at("cmd").get<std::vector<std::string>>(), n_features);
    } else {
      throw IngestionError("unknown model kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("malformed model JSON: ") + e.what());
  }
  if (n_features != 0 && model->features() != n_features)
    throw SizeError("model expects " + std::to_string(model->features()) + " features, data has " +
                    std::to_string(n_features));
  return model;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline PredictorPtr load_model(const std::string& path, std::size_t n_features = 0) {
  return model_from_json(read_json_file(path), n_features);
}

}  // namespace shapdec
