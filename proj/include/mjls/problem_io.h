#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "mjls/model.h"
#include "mjls/riccati.h"

namespace mjls {

/// A problem document plus the optional solver and Monte Carlo settings it
/// carries. Unset settings fall back to command-line flags or defaults.
struct ProblemFile {
  std::string description;
  ProblemInstance problem;
  std::optional<Method> method;
  std::optional<int> num_steps;
  std::optional<int> num_paths;
  std::optional<std::uint64_t> master_seed;
};

/// Parses and validates a problem document. Unknown fields are rejected.
/// Throws ValidationError whose field() is a JSON pointer into the document.
ProblemFile ParseProblemFile(const nlohmann::json& doc);
ProblemFile LoadProblemFile(const std::filesystem::path& path);

nlohmann::json SerializeProblemFile(const ProblemFile& file);

nlohmann::json MatrixToJson(const Matrix& m);

}  // namespace mjls
