#include "wino/layers.hpp"

#include <algorithm>
#include <cctype>

namespace wino {

namespace {

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return out;
}

}  // namespace

const std::vector<LayerSpec>& builtin_layers() {
  static const std::vector<LayerSpec> layers = {
      {"VggNet_1.2", "VggNet", 64, 64, 224},
      {"VggNet_2.2", "VggNet", 128, 128, 112},
      {"VggNet_3.2", "VggNet", 256, 256, 56},
      {"VggNet_4.2", "VggNet", 512, 512, 28},
      {"VggNet_5.2", "VggNet", 512, 512, 14},
      {"FusionNet_1.2", "FusionNet", 64, 64, 640},
      {"FusionNet_2.2", "FusionNet", 128, 128, 320},
      {"FusionNet_3.2", "FusionNet", 256, 256, 160},
      {"FusionNet_4.2", "FusionNet", 512, 512, 80},
      {"FusionNet_5.2", "FusionNet", 1024, 1024, 40},
      {"ResNet_2.1", "ResNet", 64, 64, 112},
      {"ResNet_3.1", "ResNet", 128, 128, 56},
      {"ResNet_4.1", "ResNet", 256, 256, 28},
      {"ResNet_5.1", "ResNet", 512, 512, 14},
  };
  return layers;
}

std::vector<LayerSpec> find_layers(const std::string& network, const std::string& layer) {
  const std::string net = lower(network), lay = lower(layer);
  std::vector<LayerSpec> out;
  for (const LayerSpec& l : builtin_layers()) {
    if (!net.empty() && lower(l.network).find(net) == std::string::npos) continue;
    if (!lay.empty()) {
      const std::string full = lower(l.name);
      const std::string suffix = full.substr(full.find('_') + 1);
      if (full != lay && suffix != lay) continue;
    }
    out.push_back(l);
  }
  return out;
}

ConvShape layer_shape(const LayerSpec& layer, int64_t batch, int pad, int64_t max_hw) {
  const int64_t hw = max_hw > 0 ? std::min(layer.hw, max_hw) : layer.hw;
  return make_conv_shape(batch, layer.channels, hw, hw, layer.filters, pad);
}

}  // namespace wino
