#pragma once

#include "pite/dataset.hpp"
#include "pite/forest.hpp"
#include "pite/linear.hpp"
#include "pite/random.hpp"

#include <string>
#include <variant>

namespace pite {

enum class PredictorKind { linear, forest };

struct PredictorSpec {
  PredictorKind kind = PredictorKind::linear;
  ForestParams forest;  // meaningful only when kind == forest

  static PredictorSpec linear() { return {}; }
  static PredictorSpec random_forest(ForestParams params) {
    return {PredictorKind::forest, params};
  }

  void validate() const;

  friend bool operator==(const PredictorSpec&, const PredictorSpec&) = default;
};

/// A model fitted on one arm, able to predict for any individual.
class FittedPredictor {
 public:
  explicit FittedPredictor(LinearModel model) : model_(std::move(model)) {}
  explicit FittedPredictor(Forest forest) : model_(std::move(forest)) {}

  PredictorKind kind() const {
    return std::holds_alternative<LinearModel>(model_) ? PredictorKind::linear
                                                       : PredictorKind::forest;
  }
  const LinearModel& linear() const { return std::get<LinearModel>(model_); }
  const Forest& forest() const { return std::get<Forest>(model_); }

  VectorXd predict(const MatrixXd& covariates) const;
  VectorXd predict(const Dataset& d) const { return predict(d.covariates()); }

 private:
  std::variant<LinearModel, Forest> model_;
};

FittedPredictor fit_predictor(const Dataset& d, const ArmView& arm, const PredictorSpec& spec,
                              const RandomStream& stream, unsigned threads = 1);

const char* to_string(PredictorKind kind);

}  // namespace pite
