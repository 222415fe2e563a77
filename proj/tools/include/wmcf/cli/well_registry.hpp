#pragma once

#include "wmcf/wells.hpp"

#include <map>
#include <string>
#include <vector>

namespace wmcf::cli {

struct WellEntry {
  std::string name;
  std::string description;
  std::map<std::string, std::string> defaults;
};

const std::vector<WellEntry>& well_registry();
bool is_known_well(const std::string& name);

// Builds a well from its registry name; params override the entry defaults.
// Unknown names or parameters throw InputError naming the registry.
wells::WellSpec make_well(const std::string& name, const std::map<std::string, std::string>& params = {});

}  // namespace wmcf::cli
