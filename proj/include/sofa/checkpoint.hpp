#pragma once

#include <string>

#include <json.hpp>

#include "sofa/optim.hpp"

namespace sofa::ckpt {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kMagic = "SOFA-CKPT-1";

/// Writes params as a manifest (JSON, opened by the magic string and closed
/// by a NUL byte) followed by one little-endian f64 blob in manifest order.
/// `config` is embedded verbatim in the manifest.
void save(const std::string& path, const ad::ParamStore& params,
          const nlohmann::json& config);

struct Loaded {
    ad::ParamStore params;
    nlohmann::json config;
};

Loaded load(const std::string& path);

}  // namespace sofa::ckpt
