#pragma once

#include "drpg/ambiguity.hpp"
#include "drpg/param.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace drpg::cli {

inline constexpr int kSchemaVersion = 1;

struct ParametricBlock {
    FeatureMap features;
    XiSet set;
};

/// Serialized robust MDP: the model, its ambiguity set and an optional parametric family.
struct RmdpFile {
    TabularMdp mdp;
    TransitionKernel nominal;
    AmbiguitySpec ambiguity;
    std::optional<ParametricBlock> parametric;
};

nlohmann::json to_json(const RmdpFile& file);
/// Validates the schema and every model invariant; throws InvalidInput on failure.
RmdpFile rmdp_from_json(const nlohmann::json& doc);

/// Two-space indented JSON with a trailing newline.
std::string dump_rmdp(const RmdpFile& file);
void save_rmdp(const std::filesystem::path& path, const RmdpFile& file);
RmdpFile load_rmdp(const std::filesystem::path& path);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, const char* field);

} // namespace drpg::cli
