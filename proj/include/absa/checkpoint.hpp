#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "absa/tensor.hpp"

namespace absa::ckpt {

// Named-tensor container with a JSON config header and raw little-endian
// float64 payload, behind a versioned magic string.
struct Checkpoint {
  nlohmann::json config;
  std::vector<std::string> vocab_tokens;
  bool vocab_lowercase = true;
  std::vector<std::string> relation_labels;
  std::map<std::string, nn::Tensor> tensors;
};

void save(const std::string& path, const Checkpoint& c);
Checkpoint load(const std::string& path);

}  // namespace absa::ckpt
