#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "crosstag/params.hpp"

namespace crosstag {

// Binary checkpoint, little-endian throughout. Layout (see README):
//   magic "XTCK", u32 version
//   u64 meta length, meta bytes (UTF-8 JSON: model config, vocabulary, ...)
//   u32 param count, then per parameter:
//     u16 name length, name bytes, u8 partition, u8 frozen,
//     u8 dtype, u8 rank, u64 dims..., raw row-major values
//   u8 adam state count (0..2), each:
//     i64 t, f64 lr/beta1/beta2/eps, u32 slot count, then per slot
//     (store order, trainable parameters only): name, m, v
struct AdamSnapshot {
  std::int64_t t = 0;
  AdamConfig config;
  std::vector<std::pair<std::string, std::pair<Array, Array>>> slots;  // name -> (m, v)
};

struct Checkpoint {
  std::string meta_json;
  std::unique_ptr<ParamStore> store;
  std::vector<AdamSnapshot> adam_states;
};

std::vector<std::uint8_t> serialize_checkpoint(const ParamStore& store, const std::string& meta_json,
                                               const std::vector<const Adam*>& optimizers = {});
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::string& path, const ParamStore& store, const std::string& meta_json,
                     const std::vector<const Adam*>& optimizers = {});
Checkpoint load_checkpoint(const std::string& path);

}  // namespace crosstag
