#pragma once

#include <stdexcept>
#include <string>

namespace dtxnet {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

enum class StateInput { joint, image, both };

// One of the six network types: state input 1/2/3 (joint/image/both)
// crossed with whether the robot state is also predicted (-/+).
struct NetConfig {
  StateInput state_input = StateInput::both;
  bool state_output = true;

  int t_train = 8;
  double w_j = 1.0;
  double w_i = 30.0;
  double w_o = 10.0;
  double alpha = 10.0;

  int image_size = 64;
  int hidden = 128;
  int joint_dim = 6;
  int command_dim = 2;

  bool uses_joint() const { return state_input != StateInput::image; }
  bool uses_image() const { return state_input != StateInput::joint; }

  void validate() const;

  // "1-", "2-", "3-", "1+", "2+", "3+"
  std::string type_token() const;
  static NetConfig from_type(const std::string& token);
};

// Fixed scales that bring the joint vector (angle, angle, vel, vel, torque,
// torque) to roughly unit range.
inline constexpr double kAngleScale = 3.14159265358979323846;
inline constexpr double kVelocityScale = 10.0;
inline constexpr double kTorqueScale = 0.3;

}  // namespace dtxnet
