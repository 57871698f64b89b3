#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "evadex/model.hpp"

namespace evadex {

inline constexpr int kModelFileVersion = 1;

/// Deserialized model file: {version, model_kind, k, d, parameters, seed}.
struct ModelFile {
  ModelKind kind = ModelKind::LogReg;
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  std::shared_ptr<const PredictionModel> model;
};

/// Serializes a LogRegModel, MlpModel or TreeModel. Doubles are written in
/// shortest round-trip form, so a reload predicts bit-identically.
std::string serialize_model(const PredictionModel& model, std::uint64_t seed);
void save_model(const std::filesystem::path& path, const PredictionModel& model,
                std::uint64_t seed);

/// Throws Corrupt on malformed or truncated input, VersionMismatch on an
/// unknown version, and ShapeMismatch when `expected_dim` is set and differs.
ModelFile parse_model(std::string_view text,
                      std::optional<std::size_t> expected_dim = std::nullopt);
ModelFile load_model(const std::filesystem::path& path,
                     std::optional<std::size_t> expected_dim = std::nullopt);

}  // namespace evadex
