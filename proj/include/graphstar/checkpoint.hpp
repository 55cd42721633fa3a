#pragma once

#include <string>

#include "graphstar/star_layer.hpp"

namespace graphstar {

/// Binary parameter container. Self-describing groups keyed by
/// (role, layer, head, relation) with a shape header and little-endian
/// 32-bit float payload; packed multi-head matrices are written as one group
/// per head. Format version 1.
void save_checkpoint(const std::string& path, const ParamStore& store);

/// Loads values into an existing store with the same parameter layout.
/// Throws on magic/version mismatch, missing or surplus groups, or shape
/// disagreements.
void load_checkpoint(const std::string& path, ParamStore& store);

}  // namespace graphstar
