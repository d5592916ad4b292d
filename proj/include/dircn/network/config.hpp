#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dircn::net {

enum class SubnetKind { PlainUNet, ResXUNet };

std::string to_string(SubnetKind kind);
SubnetKind parse_subnet(const std::string& text);

struct ModelConfig {
  std::size_t cascades = 3;  // 12 at full scale
  bool dense = true;
  bool interconnections = true;
  SubnetKind subnet = SubnetKind::ResXUNet;
  std::size_t levels = 3;
  std::size_t base_channels = 8;
  std::size_t cardinality = 2;  // groups of the second conv in each residual block
  std::size_t se_ratio = 4;
  std::size_t sens_net_channels = 4;
  std::uint64_t init_seed = 0;

  // Depth of the sensitivity network.
  std::size_t sens_levels() const { return levels > 1 ? levels - 1 : 1; }
};

// Throws std::invalid_argument describing the first violated constraint.
void validate(const ModelConfig& config);

// baseline, dense, resxunet, interconn, dircn. Sizes come from `sizes`;
// only the subnet kind and the two connection flags are set by the preset.
ModelConfig preset(const std::string& name, const ModelConfig& sizes = {});
const std::vector<std::string>& preset_names();

// Canonical key = value form; the inverse rejects unknown keys.
std::string to_text(const ModelConfig& config);
ModelConfig model_config_from_text(const std::string& text);
// Applies one key; returns false if the key is not a model key.
bool apply_model_key(ModelConfig& config, const std::string& key, const std::string& value);

}  // namespace dircn::net
