#pragma once

#include <string>
#include <vector>

#include "crosstag/checkpoint.hpp"
#include "crosstag/model.hpp"

namespace crosstag {

// Meta JSON carried inside checkpoints: the model configuration plus the
// vocabulary, everything needed to rebuild the model for inference.
std::string model_meta_json(const Model& model);

std::vector<std::uint8_t> snapshot_model(const Model& model,
                                         const std::vector<const Adam*>& optimizers = {});
Model model_from_checkpoint(Checkpoint&& ck);
Model load_model(const std::string& path);

}  // namespace crosstag
