#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

namespace flexsim {

struct SimDivergedError : std::runtime_error {
  explicit SimDivergedError(const std::string& what) : std::runtime_error(what) {}
};

struct BadModelError : std::runtime_error {
  explicit BadModelError(const std::string& what) : std::runtime_error(what) {}
};

// Planar chain hanging from the origin, gravity along -y. Each actuated
// motor drives a short rigid hub; the link behind it is split into
// `flex_per_link` segments coupled by torsional springs, and the drumstick
// hangs off the second link through a soft sponge joint. Coordinate zero is
// straight down, so the rest pose is a stable equilibrium.
struct ArmParams {
  int flex_per_link = 3;

  double hub_len = 0.05;
  double hub_mass = 0.06;
  double link_len = 0.15;  // per link; split evenly across the flex segments
  double seg_mass = 0.05;
  double stick_len = 0.12;
  double stick_mass = 0.03;

  double k_flex = 0.5;     // N*m/rad
  double c_flex = 0.01;    // N*m*s/rad
  double k_sponge = 0.2;
  double c_sponge = 0.01;
  double joint_friction = 0.02;  // viscous, actuated joints

  double gravity = 9.8;
  double u_min = -0.3;
  double u_max = 0.3;
  double vel_cap = 30.0;  // rad/s safety clamp

  // Drum: horizontal segment y = drum_y for x in [drum_x0, drum_x1].
  double drum_y = -0.38;
  double drum_x0 = 0.10;
  double drum_x1 = 0.60;
  double restitution = 0.3;
  double k_volume = 1.0;
  double volume_cap = 3.0;
  double volume_threshold = 0.1;  // v_thre

  double substep = 2.5e-4;  // s

  int coord_count() const { return 2 + 2 * flex_per_link + 1; }
  void validate() const;  // throws BadModelError on non-positive constants
};

struct SimState {
  Eigen::VectorXd q;
  Eigen::VectorXd qd;
  double time = 0.0;
};

struct JointState {
  std::array<double, 2> angle{};
  std::array<double, 2> velocity{};
  std::array<double, 2> torque{};
};

struct SoundEvent {
  double time = 0.0;
  double volume = 0.0;  // raw, >= 0
};

struct Segment {
  double x0, y0, x1, y1;
};

// Pure decision rule for a drum strike within one substep: a downward
// crossing of the surface inside the pad emits k_v*|vy| capped at v_cap.
std::optional<double> drum_strike_volume(double prev_tip_y, double tip_y,
                                         double tip_x, double tip_vy,
                                         const ArmParams& p);

// o = v if v >= v_thre else 0
double volume_to_task(double v, double v_thre);

class ArmSim {
 public:
  explicit ArmSim(ArmParams params);

  const ArmParams& params() const { return params_; }
  const SimState& state() const { return state_; }
  void set_state(const SimState& s);
  void reset();

  // Advance by dt (one control period) in fixed substeps. Torques are
  // clamped to the command box. At most one SoundEvent per call: the first
  // downward surface crossing.
  std::optional<SoundEvent> step(const std::array<double, 2>& u, double dt);

  JointState joint_state(const std::array<double, 2>& applied_torque) const;

  std::array<double, 2> tip() const;
  std::array<double, 2> tip_velocity() const;

  // Kinetic + gravitational + spring potential energy.
  double energy() const;

  std::vector<Segment> segments() const;  // world-space, for rendering

 private:
  struct Kinematics {
    std::vector<Eigen::Vector2d> joint_pos;  // n+1 entries, last = tip
    std::vector<Eigen::Vector2d> com;
    std::vector<double> abs_angle;
    std::vector<double> omega;  // absolute angular velocity per body
  };

  Kinematics kinematics() const;
  Eigen::MatrixXd mass_matrix(const Kinematics& k) const;
  Eigen::VectorXd bias_torque(const Kinematics& k) const;
  Eigen::VectorXd applied_torque(const std::array<double, 2>& u) const;
  Eigen::Vector2d point_velocity(const Kinematics& k, int upto,
                                 const Eigen::Vector2d& point) const;

  ArmParams params_;
  SimState state_;
  int n_;
  std::vector<double> len_;
  std::vector<double> mass_;
  std::vector<double> inertia_;
  enum class JointKind { actuated, flex, sponge };
  std::vector<JointKind> kind_;
  std::array<int, 2> actuated_index_{};
  double prev_tip_y_ = 0.0;
};

}  // namespace flexsim
