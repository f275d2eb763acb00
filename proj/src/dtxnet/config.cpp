#include "dtxnet/config.hpp"

namespace dtxnet {

void NetConfig::validate() const {
  if (t_train < 1) throw ConfigError("t_train must be >= 1");
  if (!(w_j > 0.0 && w_i > 0.0 && w_o > 0.0)) {
    throw ConfigError("loss gains must be > 0");
  }
  if (!(alpha > 1.0)) throw ConfigError("alpha must be > 1");
  if (image_size < 8) throw ConfigError("image_size must be >= 8");
  if (hidden < 1 || joint_dim < 1 || command_dim < 1) {
    throw ConfigError("non-positive network extent");
  }
}

std::string NetConfig::type_token() const {
  std::string t;
  switch (state_input) {
    case StateInput::joint: t = "1"; break;
    case StateInput::image: t = "2"; break;
    case StateInput::both: t = "3"; break;
  }
  t += state_output ? '+' : '-';
  return t;
}

NetConfig NetConfig::from_type(const std::string& token) {
  if (token.size() != 2) throw ConfigError("bad type token: " + token);
  NetConfig cfg;
  switch (token[0]) {
    case '1': cfg.state_input = StateInput::joint; break;
    case '2': cfg.state_input = StateInput::image; break;
    case '3': cfg.state_input = StateInput::both; break;
    default: throw ConfigError("bad type token: " + token);
  }
  switch (token[1]) {
    case '-': cfg.state_output = false; break;
    case '+': cfg.state_output = true; break;
    default: throw ConfigError("bad type token: " + token);
  }
  return cfg;
}

}  // namespace dtxnet
