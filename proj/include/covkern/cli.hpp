#pragma once

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace covkern::cli {

//! Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kDataError = 2;

int dispatch(int argc, char** argv);
//! Same as the argv form; args excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

//! Runs a subcommand from its fully resolved configuration, writing outputs
//! and manifest.json into `out_dir`. This is what `replay` calls.
void execute(const std::string& subcommand, const nlohmann::json& config,
             const std::filesystem::path& out_dir, std::ostream& out);

} // namespace covkern::cli
