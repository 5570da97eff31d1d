#include "pite/predictor.hpp"

namespace pite {

void PredictorSpec::validate() const {
  if (kind == PredictorKind::forest) forest.validate();
}

VectorXd FittedPredictor::predict(const MatrixXd& covariates) const {
  return std::visit(
      [&](const auto& model) -> VectorXd {
        using Model = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<Model, LinearModel>) {
          return predict_linear(model, covariates);
        } else {
          return predict_forest(model, covariates);
        }
      },
      model_);
}

FittedPredictor fit_predictor(const Dataset& d, const ArmView& arm, const PredictorSpec& spec,
                              const RandomStream& stream, unsigned threads) {
  switch (spec.kind) {
    case PredictorKind::linear:
      return FittedPredictor(fit_linear(d, arm));
    case PredictorKind::forest:
      return FittedPredictor(fit_forest(d, arm, spec.forest, stream, threads));
  }
  throw ConfigError("unknown predictor kind");
}

const char* to_string(PredictorKind kind) {
  return kind == PredictorKind::forest ? "forest" : "linear";
}

}  // namespace pite
