#include "flexsim/arm.hpp"

#include <algorithm>
#include <cmath>

namespace flexsim {

namespace {

Eigen::Vector2d perp(const Eigen::Vector2d& v) { return {-v.y(), v.x()}; }

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

}  // namespace

void ArmParams::validate() const {
  auto pos = [](double v, const char* name) {
    if (!(v > 0.0)) throw BadModelError(std::string(name) + " must be > 0");
  };
  if (flex_per_link < 1) throw BadModelError("flex_per_link must be >= 1");
  pos(hub_len, "hub_len");
  pos(hub_mass, "hub_mass");
  pos(link_len, "link_len");
  pos(seg_mass, "seg_mass");
  pos(stick_len, "stick_len");
  pos(stick_mass, "stick_mass");
  pos(k_flex, "k_flex");
  pos(c_flex, "c_flex");
  pos(k_sponge, "k_sponge");
  pos(c_sponge, "c_sponge");
  pos(joint_friction, "joint_friction");
  pos(vel_cap, "vel_cap");
  pos(substep, "substep");
  pos(k_volume, "k_volume");
  pos(volume_cap, "volume_cap");
  if (u_min >= u_max) throw BadModelError("u_min must be < u_max");
  if (drum_x0 >= drum_x1) throw BadModelError("drum_x0 must be < drum_x1");
  if (gravity < 0.0) throw BadModelError("gravity must be >= 0");
  if (restitution < 0.0 || restitution > 1.0) {
    throw BadModelError("restitution must lie in [0,1]");
  }
}

std::optional<double> drum_strike_volume(double prev_tip_y, double tip_y,
                                         double tip_x, double tip_vy,
                                         const ArmParams& p) {
  if (tip_x < p.drum_x0 || tip_x > p.drum_x1) return std::nullopt;
  if (!(prev_tip_y > p.drum_y && tip_y <= p.drum_y && tip_vy < 0.0)) {
    return std::nullopt;
  }
  return std::min(p.k_volume * std::fabs(tip_vy), p.volume_cap);
}

double volume_to_task(double v, double v_thre) { return v >= v_thre ? v : 0.0; }

ArmSim::ArmSim(ArmParams params) : params_(std::move(params)) {
  params_.validate();
  n_ = params_.coord_count();
  const int flex = params_.flex_per_link;
  const double seg_len = params_.link_len / static_cast<double>(flex);

  // Chain order: hub, flex segments (link 1), hub, flex segments (link 2),
  // stick on the sponge joint.
  auto push = [&](JointKind kind, double len, double mass) {
    kind_.push_back(kind);
    len_.push_back(len);
    mass_.push_back(mass);
    inertia_.push_back(mass * len * len / 12.0);
  };
  for (int link = 0; link < 2; ++link) {
    actuated_index_[static_cast<size_t>(link)] = static_cast<int>(kind_.size());
    push(JointKind::actuated, params_.hub_len, params_.hub_mass);
    for (int i = 0; i < flex; ++i) push(JointKind::flex, seg_len, params_.seg_mass);
  }
  push(JointKind::sponge, params_.stick_len, params_.stick_mass);

  reset();
}

void ArmSim::reset() {
  state_.q = Eigen::VectorXd::Zero(n_);
  state_.qd = Eigen::VectorXd::Zero(n_);
  state_.time = 0.0;
  prev_tip_y_ = tip()[1];
}

void ArmSim::set_state(const SimState& s) {
  if (s.q.size() != n_ || s.qd.size() != n_) {
    throw BadModelError("state extent does not match model");
  }
  state_ = s;
  prev_tip_y_ = tip()[1];
}

ArmSim::Kinematics ArmSim::kinematics() const {
  Kinematics k;
  k.joint_pos.resize(static_cast<size_t>(n_) + 1);
  k.com.resize(static_cast<size_t>(n_));
  k.abs_angle.resize(static_cast<size_t>(n_));
  k.omega.resize(static_cast<size_t>(n_));
  Eigen::Vector2d p(0.0, 0.0);
  double phi = 0.0;
  double om = 0.0;
  for (int i = 0; i < n_; ++i) {
    phi += state_.q[i];
    om += state_.qd[i];
    k.joint_pos[static_cast<size_t>(i)] = p;
    k.abs_angle[static_cast<size_t>(i)] = phi;
    k.omega[static_cast<size_t>(i)] = om;
    // angle 0 points straight down
    const Eigen::Vector2d dir(std::sin(phi), -std::cos(phi));
    k.com[static_cast<size_t>(i)] = p + 0.5 * len_[static_cast<size_t>(i)] * dir;
    p += len_[static_cast<size_t>(i)] * dir;
  }
  k.joint_pos[static_cast<size_t>(n_)] = p;
  return k;
}

Eigen::MatrixXd ArmSim::mass_matrix(const Kinematics& k) const {
  // M[j][l] = sum over bodies b >= max(j,l) of m_b (c_b-p_j).(c_b-p_l) + I_b
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
  for (int j = 0; j < n_; ++j) {
    for (int l = j; l < n_; ++l) {
      double s = 0.0;
      for (int b = l; b < n_; ++b) {
        const Eigen::Vector2d rj = k.com[static_cast<size_t>(b)] -
                                   k.joint_pos[static_cast<size_t>(j)];
        const Eigen::Vector2d rl = k.com[static_cast<size_t>(b)] -
                                   k.joint_pos[static_cast<size_t>(l)];
        s += mass_[static_cast<size_t>(b)] * rj.dot(rl) +
             inertia_[static_cast<size_t>(b)];
      }
      m(j, l) = s;
      m(l, j) = s;
    }
  }
  return m;
}

Eigen::VectorXd ArmSim::bias_torque(const Kinematics& k) const {
  // Inverse dynamics with qdd = 0: the velocity-product and gravity terms.
  std::vector<Eigen::Vector2d> acc_joint(static_cast<size_t>(n_) + 1,
                                         Eigen::Vector2d::Zero());
  std::vector<Eigen::Vector2d> acc_com(static_cast<size_t>(n_));
  for (int i = 0; i < n_; ++i) {
    const double phi = k.abs_angle[static_cast<size_t>(i)];
    const double om = k.omega[static_cast<size_t>(i)];
    const Eigen::Vector2d dir(std::sin(phi), -std::cos(phi));
    const Eigen::Vector2d d = len_[static_cast<size_t>(i)] * dir;
    acc_com[static_cast<size_t>(i)] =
        acc_joint[static_cast<size_t>(i)] - om * om * 0.5 * d;
    acc_joint[static_cast<size_t>(i) + 1] =
        acc_joint[static_cast<size_t>(i)] - om * om * d;
  }
  const Eigen::Vector2d g_vec(0.0, -params_.gravity);
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(n_);
  for (int j = 0; j < n_; ++j) {
    double s = 0.0;
    for (int b = j; b < n_; ++b) {
      const Eigen::Vector2d r = k.com[static_cast<size_t>(b)] -
                                k.joint_pos[static_cast<size_t>(j)];
      const Eigen::Vector2d f =
          mass_[static_cast<size_t>(b)] * (acc_com[static_cast<size_t>(b)] - g_vec);
      s += cross2(r, f);
    }
    tau[j] = s;
  }
  return tau;
}

Eigen::VectorXd ArmSim::applied_torque(const std::array<double, 2>& u) const {
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(n_);
  for (int i = 0; i < n_; ++i) {
    switch (kind_[static_cast<size_t>(i)]) {
      case JointKind::actuated:
        tau[i] = -params_.joint_friction * state_.qd[i];
        break;
      case JointKind::flex:
        tau[i] = -params_.k_flex * state_.q[i] - params_.c_flex * state_.qd[i];
        break;
      case JointKind::sponge:
        tau[i] = -params_.k_sponge * state_.q[i] - params_.c_sponge * state_.qd[i];
        break;
    }
  }
  for (int m = 0; m < 2; ++m) {
    const double cmd = std::clamp(u[static_cast<size_t>(m)], params_.u_min,
                                  params_.u_max);
    tau[actuated_index_[static_cast<size_t>(m)]] += cmd;
  }
  return tau;
}

Eigen::Vector2d ArmSim::point_velocity(const Kinematics& k, int upto,
                                       const Eigen::Vector2d& point) const {
  // v(point) = sum over joints j <= upto of qd_j * perp(point - p_j)
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  for (int j = 0; j <= upto; ++j) {
    v += state_.qd[j] * perp(point - k.joint_pos[static_cast<size_t>(j)]);
  }
  return v;
}

std::optional<SoundEvent> ArmSim::step(const std::array<double, 2>& u, double dt) {
  const int substeps =
      std::max(1, static_cast<int>(std::lround(dt / params_.substep)));
  const double h = dt / static_cast<double>(substeps);

  std::optional<SoundEvent> event;
  for (int s = 0; s < substeps; ++s) {
    Kinematics k = kinematics();
    const Eigen::MatrixXd m = mass_matrix(k);
    const Eigen::VectorXd rhs = applied_torque(u) - bias_torque(k);
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
      throw SimDivergedError("mass matrix not positive definite");
    }
    const Eigen::VectorXd qdd = llt.solve(rhs);

    state_.qd += h * qdd;
    for (int i = 0; i < n_; ++i) {
      state_.qd[i] = std::clamp(state_.qd[i], -params_.vel_cap, params_.vel_cap);
    }
    state_.q += h * state_.qd;
    state_.time += h;

    // Drum head sensed from above: impulse and sound only on a downward
    // crossing of the surface inside the pad. The tip may pass freely
    // underneath (that region is the drum body, not the head).
    Kinematics k2 = kinematics();
    const Eigen::Vector2d tip_pos = k2.joint_pos[static_cast<size_t>(n_)];
    const Eigen::Vector2d tip_vel = point_velocity(k2, n_ - 1, tip_pos);
    if (auto vol = drum_strike_volume(prev_tip_y_, tip_pos.y(), tip_pos.x(),
                                      tip_vel.y(), params_)) {
      if (!event) event = SoundEvent{state_.time, *vol};
      // Impulse along +y at the tip: J_j = d(tip_y)/dq_j = (tip - p_j).x
      Eigen::VectorXd jac(n_);
      for (int j = 0; j < n_; ++j) {
        jac[j] = (tip_pos - k2.joint_pos[static_cast<size_t>(j)]).x();
      }
      const Eigen::MatrixXd m2 = mass_matrix(k2);
      Eigen::LLT<Eigen::MatrixXd> llt2(m2);
      const Eigen::VectorXd minv_jt = llt2.solve(jac);
      const double meff = jac.dot(minv_jt);
      if (meff > 1e-12) {
        const double lambda =
            -(1.0 + params_.restitution) * tip_vel.y() / meff;
        state_.qd += minv_jt * lambda;
      }
    }
    prev_tip_y_ = tip_pos.y();

    if (!state_.q.allFinite() || !state_.qd.allFinite()) {
      throw SimDivergedError("non-finite state at t=" + std::to_string(state_.time));
    }
  }
  return event;
}

JointState ArmSim::joint_state(const std::array<double, 2>& applied_torque) const {
  JointState js;
  for (int m = 0; m < 2; ++m) {
    const int idx = actuated_index_[static_cast<size_t>(m)];
    js.angle[static_cast<size_t>(m)] = state_.q[idx];
    js.velocity[static_cast<size_t>(m)] = state_.qd[idx];
    js.torque[static_cast<size_t>(m)] =
        std::clamp(applied_torque[static_cast<size_t>(m)], params_.u_min,
                   params_.u_max);
  }
  return js;
}

std::array<double, 2> ArmSim::tip() const {
  Kinematics k = kinematics();
  const Eigen::Vector2d t = k.joint_pos[static_cast<size_t>(n_)];
  return {t.x(), t.y()};
}

std::array<double, 2> ArmSim::tip_velocity() const {
  Kinematics k = kinematics();
  const Eigen::Vector2d t = k.joint_pos[static_cast<size_t>(n_)];
  const Eigen::Vector2d v = point_velocity(k, n_ - 1, t);
  return {v.x(), v.y()};
}

double ArmSim::energy() const {
  Kinematics k = kinematics();
  const Eigen::MatrixXd m = mass_matrix(k);
  double e = 0.5 * state_.qd.dot(m * state_.qd);
  for (int b = 0; b < n_; ++b) {
    e += mass_[static_cast<size_t>(b)] * params_.gravity *
         k.com[static_cast<size_t>(b)].y();
  }
  for (int i = 0; i < n_; ++i) {
    if (kind_[static_cast<size_t>(i)] == JointKind::flex) {
      e += 0.5 * params_.k_flex * state_.q[i] * state_.q[i];
    } else if (kind_[static_cast<size_t>(i)] == JointKind::sponge) {
      e += 0.5 * params_.k_sponge * state_.q[i] * state_.q[i];
    }
  }
  return e;
}

std::vector<Segment> ArmSim::segments() const {
  Kinematics k = kinematics();
  std::vector<Segment> out;
  out.reserve(static_cast<size_t>(n_));
  for (int i = 0; i < n_; ++i) {
    const auto& a = k.joint_pos[static_cast<size_t>(i)];
    const auto& b = k.joint_pos[static_cast<size_t>(i) + 1];
    out.push_back({a.x(), a.y(), b.x(), b.y()});
  }
  return out;
}

}  // namespace flexsim
