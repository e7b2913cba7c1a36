#include "crosstag/model_io.hpp"

#include <json.hpp>

namespace crosstag {

using nlohmann::json;

std::string model_meta_json(const Model& model) {
  const ModelConfig& c = model.config();
  json j;
  j["format"] = "crosstag-model";
  j["mode"] = mode_name(c.mode);
  j["emb_dim"] = c.emb_dim;
  j["hidden_boundary"] = c.hidden_boundary;
  j["hidden_unified"] = c.hidden_unified;
  j["relations"] = c.relations;
  j["hops"] = c.hops;
  j["dropout"] = c.dropout;
  j["lambda"] = c.lambda;
  j["finetune_embeddings"] = c.finetune_embeddings;
  j["dmi_concat_hidden"] = c.dmi_concat_hidden;
  j["memory_zero_init"] = c.memory_zero_init;
  j["sal_detach_selector"] = c.sal_detach_selector;
  j["vocab"] = model.vocab().tokens();
  return j.dump();
}

std::vector<std::uint8_t> snapshot_model(const Model& model,
                                         const std::vector<const Adam*>& optimizers) {
  return serialize_checkpoint(model.params(), model_meta_json(model), optimizers);
}

Model model_from_checkpoint(Checkpoint&& ck) {
  json j = json::parse(ck.meta_json);
  if (!j.contains("format") || j["format"] != "crosstag-model")
    throw std::runtime_error("checkpoint: meta is not a model description");
  ModelConfig c;
  auto mode = mode_from_string(j.at("mode").get<std::string>());
  if (!mode) throw std::runtime_error("checkpoint: unknown mode in meta");
  c.mode = *mode;
  c.emb_dim = j.at("emb_dim").get<std::size_t>();
  c.hidden_boundary = j.at("hidden_boundary").get<std::size_t>();
  c.hidden_unified = j.at("hidden_unified").get<std::size_t>();
  c.relations = j.at("relations").get<std::size_t>();
  c.hops = j.at("hops").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.finetune_embeddings = j.at("finetune_embeddings").get<bool>();
  c.dmi_concat_hidden = j.at("dmi_concat_hidden").get<bool>();
  c.memory_zero_init = j.at("memory_zero_init").get<bool>();
  c.sal_detach_selector = j.at("sal_detach_selector").get<bool>();
  Vocabulary vocab = Vocabulary::from_tokens(j.at("vocab").get<std::vector<std::string>>());
  return Model(c, std::move(vocab), std::move(ck.store));
}

Model load_model(const std::string& path) { return model_from_checkpoint(load_checkpoint(path)); }

}  // namespace crosstag
