#include "dircn/network/config.hpp"

#include <sstream>
#include <stdexcept>

#include "dircn/util/keyvalue.hpp"

namespace dircn::net {

std::string to_string(SubnetKind kind) { return kind == SubnetKind::PlainUNet ? "plain_unet" : "resxunet"; }

SubnetKind parse_subnet(const std::string& text) {
  if (text == "plain_unet") return SubnetKind::PlainUNet;
  if (text == "resxunet") return SubnetKind::ResXUNet;
  throw std::invalid_argument("unknown subnet '" + text + "' (expected plain_unet or resxunet)");
}

void validate(const ModelConfig& c) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("model config: " + msg); };
  if (c.cascades < 1) fail("cascades must be >= 1");
  if (c.levels < 1) fail("levels must be >= 1");
  if (c.levels > 8) fail("levels must be <= 8");
  if (c.base_channels < 1) fail("base_channels must be >= 1");
  if (c.sens_net_channels < 1) fail("sens_net_channels must be >= 1");
  if (c.se_ratio < 1) fail("se_ratio must be >= 1");
  if (c.cardinality < 1) fail("cardinality must be >= 1");
  if (c.subnet == SubnetKind::ResXUNet) {
    if (c.base_channels % c.cardinality != 0) {
      fail("base_channels (" + std::to_string(c.base_channels) + ") must be divisible by cardinality (" +
           std::to_string(c.cardinality) + ")");
    }
    if (c.sens_net_channels % c.cardinality != 0) {
      fail("sens_net_channels (" + std::to_string(c.sens_net_channels) + ") must be divisible by cardinality (" +
           std::to_string(c.cardinality) + ")");
    }
  }
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"baseline", "dense", "resxunet", "interconn", "dircn"};
  return names;
}

ModelConfig preset(const std::string& name, const ModelConfig& sizes) {
  ModelConfig c = sizes;
  c.dense = false;
  c.interconnections = false;
  c.subnet = SubnetKind::PlainUNet;
  if (name == "baseline") {
  } else if (name == "dense") {
    c.dense = true;
  } else if (name == "resxunet") {
    c.subnet = SubnetKind::ResXUNet;
  } else if (name == "interconn") {
    c.interconnections = true;
  } else if (name == "dircn") {
    c.dense = true;
    c.interconnections = true;
    c.subnet = SubnetKind::ResXUNet;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "' (expected baseline, dense, resxunet, interconn or dircn)");
  }
  validate(c);
  return c;
}

std::string to_text(const ModelConfig& c) {
  std::ostringstream out;
  out << "cascades = " << c.cascades << "\n"
      << "dense = " << (c.dense ? "true" : "false") << "\n"
      << "interconnections = " << (c.interconnections ? "true" : "false") << "\n"
      << "subnet = " << to_string(c.subnet) << "\n"
      << "levels = " << c.levels << "\n"
      << "base_channels = " << c.base_channels << "\n"
      << "cardinality = " << c.cardinality << "\n"
      << "se_ratio = " << c.se_ratio << "\n"
      << "sens_net_channels = " << c.sens_net_channels << "\n"
      << "init_seed = " << c.init_seed << "\n";
  return out.str();
}

bool apply_model_key(ModelConfig& c, const std::string& key, const std::string& value) {
  if (key == "cascades") {
    c.cascades = util::parse_size(key, value);
  } else if (key == "dense") {
    c.dense = util::parse_bool(key, value);
  } else if (key == "interconnections") {
    c.interconnections = util::parse_bool(key, value);
  } else if (key == "subnet") {
    c.subnet = parse_subnet(value);
  } else if (key == "levels") {
    c.levels = util::parse_size(key, value);
  } else if (key == "base_channels") {
    c.base_channels = util::parse_size(key, value);
  } else if (key == "cardinality") {
    c.cardinality = util::parse_size(key, value);
  } else if (key == "se_ratio") {
    c.se_ratio = util::parse_size(key, value);
  } else if (key == "sens_net_channels") {
    c.sens_net_channels = util::parse_size(key, value);
  } else if (key == "init_seed") {
    c.init_seed = util::parse_u64(key, value);
  } else {
    return false;
  }
  return true;
}

ModelConfig model_config_from_text(const std::string& text) {
  ModelConfig c;
  for (const auto& [key, value] : util::parse_key_values(text)) {
    if (!apply_model_key(c, key, value)) throw std::invalid_argument("unknown model config key '" + key + "'");
  }
  validate(c);
  return c;
}

}  // namespace dircn::net
