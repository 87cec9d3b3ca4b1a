#pragma once

#include <string>
#include <vector>

#include "wino/shape.hpp"

namespace wino {

// One 3x3 benchmark layer; hw is the square input edge.
struct LayerSpec {
  std::string name;
  std::string network;
  int64_t channels;
  int64_t filters;
  int64_t hw;
};

const std::vector<LayerSpec>& builtin_layers();

// Case-insensitive filters; empty string matches everything. layer matches
// either the full name or its suffix after the underscore.
std::vector<LayerSpec> find_layers(const std::string& network, const std::string& layer);

// max_hw > 0 caps the spatial edge, keeping channels; used where a direct
// reference at full resolution would dominate the run.
ConvShape layer_shape(const LayerSpec& layer, int64_t batch, int pad = 0,
                      int64_t max_hw = 0);

}  // namespace wino
