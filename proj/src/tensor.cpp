// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0

#include <openssl/evp.h>

#include <charconv>
#include <stdexcept>
#include <string>

#include "synthdistill/nets.hpp"
#include "synthdistill/tensor.hpp"

namespace synthdistill {

std::string to_string(const Activation& a) {
  switch (a.kind) {
    case ActivationKind::kIdentity:
      return "identity";
    case ActivationKind::kRelu:
      return "relu";
    case ActivationKind::kTanh:
      return "tanh";
    case ActivationKind::kLeakyRelu: {
      char buf[64];
      const auto res = std::to_chars(buf, buf + sizeof buf, a.slope);
      return "leaky-relu(" + std::string(buf, res.ptr) + ")";
    }
  }
  return "identity";
}

Activation parse_activation(const std::string& text) {
  if (text == "identity" || text == "none") return Activation::identity();
  if (text == "relu") return Activation::relu();
  if (text == "tanh") return Activation::tanh();
  if (text == "leaky-relu") return Activation::leaky_relu(0.2);
  const std::string prefix = "leaky-relu(";
  if (text.rfind(prefix, 0) == 0 && text.back() == ')') {
    const std::string inner = text.substr(prefix.size(), text.size() - prefix.size() - 1);
    std::size_t used = 0;
    double slope = 0.0;
    try {
      slope = std::stod(inner, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == inner.size() && !inner.empty() && slope >= 0.0)
      return Activation::leaky_relu(slope);
  }
  throw ConfigError("unknown activation '" + text + "'");
}

std::string sha256_hex(std::span<const unsigned char> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace synthdistill
