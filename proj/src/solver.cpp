#include "eslsc/solver.hpp"

#include <json.hpp>

namespace eslsc {

Prediction make_prediction(std::string question_id, std::vector<double> p_right) {
  if (p_right.empty()) throw RangeError("prediction needs at least one option");
  Prediction p;
  p.question_id = std::move(question_id);
  p.chosen_index = 0;
  for (std::size_t i = 1; i < p_right.size(); ++i) {
    if (p_right[i] > p_right[static_cast<std::size_t>(p.chosen_index)]) p.chosen_index = static_cast<int>(i);
  }
  p.confidence = p_right[static_cast<std::size_t>(p.chosen_index)];
  p.p_right = std::move(p_right);
  return p;
}

Decision decide(Prediction prediction, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw RangeError("threshold must lie in [0, 1]");
  Decision d;
  d.answered = prediction.confidence >= tau;
  d.threshold = tau;
  d.prediction = std::move(prediction);
  return d;
}

std::string decision_record(const Decision& d, const std::optional<int>& answer_index) {
  nlohmann::ordered_json j;
  j["id"] = d.prediction.question_id;
  j["chosen"] = d.prediction.chosen_index;
  j["probs"] = d.prediction.p_right;
  j["confidence"] = d.prediction.confidence;
  j["decision"] = d.answered ? "answered" : "abstained";
  j["threshold"] = d.threshold;
  if (answer_index) j["correct"] = d.prediction.chosen_index == *answer_index;
  if (!d.prediction.diagnostics.empty()) j["diagnostics"] = d.prediction.diagnostics;
  return j.dump();
}

}  // namespace eslsc
