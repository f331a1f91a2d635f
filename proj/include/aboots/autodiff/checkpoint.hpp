#pragma once

#include <filesystem>
#include <iosfwd>

#include "aboots/autodiff/parameters.hpp"

namespace aboots::ad {

// Parameter file layout:
//
//   aboots-params 1 <count>\n
//   <name> <group> <d0xd1...> <byte offset>\n     (one per tensor)
//   <raw little-endian IEEE-754 doubles>
//
// Offsets are relative to the first payload byte.
void save_parameters(const ParameterSet& params, std::ostream& out);
void save_parameters(const ParameterSet& params, const std::filesystem::path& path);
ParameterSet load_parameters(std::istream& in);
ParameterSet load_parameters(const std::filesystem::path& path);

// Copies loaded values into `target`; names, groups and shapes must match
// exactly, otherwise CheckpointError.
void assign_parameters(ParameterSet& target, const ParameterSet& loaded);

}  // namespace aboots::ad
