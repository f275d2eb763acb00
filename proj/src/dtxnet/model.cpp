#include "dtxnet/model.hpp"

#include <cmath>

#include "numcore/rng.hpp"

namespace dtxnet {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.9;

}  // namespace

Arch make_arch(int image_size) {
  if (image_size < 8) throw ConfigError("image_size must be >= 8");
  Arch a;
  a.enc_spatial.push_back(image_size);
  a.enc_ch.push_back(3);
  Index s = image_size;
  Index ch = 4;
  while (s > 2) {
    s = numcore::conv_out_extent(s);
    a.enc_spatial.push_back(s);
    a.enc_ch.push_back(std::min<Index>(ch, 64));
    ch *= 2;
  }
  a.flat = a.enc_ch.back() * 4;

  // Decoder mirrors the encoder: channels reversed with a single output
  // plane, output padding chosen per layer so the spatial chain inverts
  // exactly (odd targets need the extra row/column).
  for (size_t i = a.enc_ch.size(); i-- > 1;) a.dec_ch.push_back(a.enc_ch[i]);
  a.dec_ch.push_back(1);
  for (size_t i = a.enc_spatial.size() - 1; i-- > 0;) {
    const Index target = a.enc_spatial[i];
    a.dec_out_pad.push_back(target % 2);
    const Index from = a.enc_spatial[i + 1];
    if (numcore::deconv_out_extent(from, target % 2) != target) {
      throw ConfigError("decoder chain cannot invert the encoder chain");
    }
  }
  return a;
}

Model::Model(NetConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  arch_ = make_arch(cfg_.image_size);
  if (cfg_.image_size == 64 && arch_.flat != 256) {
    throw ConfigError("64x64 encoder must flatten to 256");
  }
  build_params(seed);
}

void Model::build_params(std::uint64_t seed) {
  numcore::Rng rng(seed);
  auto uniform = [&](numcore::Shape shape, Index fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return rng.uniform_tensor(std::move(shape), -bound, bound);
  };

  const Index hid = cfg_.hidden;

  if (cfg_.uses_image()) {
    for (int i = 0; i < arch_.enc_layers(); ++i) {
      const Index ci = arch_.enc_ch[static_cast<size_t>(i)];
      const Index co = arch_.enc_ch[static_cast<size_t>(i) + 1];
      const std::string tag = "enc.conv" + std::to_string(i);
      params_.add(tag + ".w", uniform({co, ci, 2, 2}, ci * 4));
      params_.add(tag + ".b", uniform({co}, ci * 4));
      const std::string bn = "enc.bn" + std::to_string(i);
      params_.add(bn + ".gamma", Tensor::full({co}, 1.0));
      params_.add(bn + ".beta", Tensor({co}));
      params_.add_buffer(bn + ".mean", Tensor({co}));
      params_.add_buffer(bn + ".var", Tensor::full({co}, 1.0));
    }
  }

  Index init_in = 0;
  if (cfg_.uses_image()) init_in += arch_.flat;
  if (cfg_.uses_joint()) init_in += cfg_.joint_dim;
  params_.add("init.fc.w", uniform({hid, init_in}, init_in));
  params_.add("init.fc.b", uniform({hid}, init_in));

  params_.add("cmd.fc.w", uniform({hid, cfg_.command_dim}, cfg_.command_dim));
  params_.add("cmd.fc.b", uniform({hid}, cfg_.command_dim));

  params_.add("lstm.wx", uniform({4 * hid, hid}, hid));
  params_.add("lstm.wh", uniform({4 * hid, hid}, hid));
  {
    Tensor b({4 * hid});
    for (Index j = hid; j < 2 * hid; ++j) b[j] = 1.0;  // open forget gates
    params_.add("lstm.b", std::move(b));
  }

  params_.add("task.fc.w", uniform({1, hid}, hid));
  params_.add("task.fc.b", uniform({1}, hid));

  if (cfg_.state_output) {
    if (cfg_.uses_joint()) {
      params_.add("robot.fc.w", uniform({cfg_.joint_dim, hid}, hid));
      params_.add("robot.fc.b", uniform({cfg_.joint_dim}, hid));
    }
    if (cfg_.uses_image()) {
      params_.add("dec.fc.w", uniform({arch_.flat, hid}, hid));
      params_.add("dec.fc.b", uniform({arch_.flat}, hid));
      const int layers = static_cast<int>(arch_.dec_ch.size()) - 1;
      for (int i = 0; i < layers; ++i) {
        const Index ci = arch_.dec_ch[static_cast<size_t>(i)];
        const Index co = arch_.dec_ch[static_cast<size_t>(i) + 1];
        const std::string tag = "dec.deconv" + std::to_string(i);
        params_.add(tag + ".w", uniform({ci, co, 2, 2}, ci * 4));
        params_.add(tag + ".b", uniform({co}, ci * 4));
        if (i + 1 < layers) {  // no batch norm on the final layer
          const std::string bn = "dec.bn" + std::to_string(i);
          params_.add(bn + ".gamma", Tensor::full({co}, 1.0));
          params_.add(bn + ".beta", Tensor({co}));
          params_.add_buffer(bn + ".mean", Tensor({co}));
          params_.add_buffer(bn + ".var", Tensor::full({co}, 1.0));
        }
      }
    }
  }
}

Tensor Model::normalize_joint(const Tensor& raw) {
  if (raw.shape().size() != 2 || raw.shape()[1] != 6) {
    throw ConfigError("joint batch must be [B,6]");
  }
  Tensor out(raw.shape());
  const Index batch = raw.shape()[0];
  const double scales[6] = {kAngleScale,    kAngleScale,    kVelocityScale,
                            kVelocityScale, kTorqueScale,   kTorqueScale};
  for (Index r = 0; r < batch; ++r) {
    for (Index j = 0; j < 6; ++j) {
      out[r * 6 + j] = raw[r * 6 + j] / scales[j];
    }
  }
  return out;
}

BoundModel::BoundModel(const Model& model, Graph& graph, EvalMode mode)
    : model_(model), g_(graph), mode_(mode) {}

Value BoundModel::param(const std::string& name) {
  auto it = leaves_.find(name);
  if (it != leaves_.end()) return it->second;
  Value v = g_.leaf(model_.params().value(name), true);
  leaves_.emplace(name, v);
  return v;
}

Value BoundModel::conv_block(Value x, int layer) {
  const std::string tag = "enc.conv" + std::to_string(layer);
  const std::string bn = "enc.bn" + std::to_string(layer);
  Value y = numcore::conv2d(g_, x, param(tag + ".w"), param(tag + ".b"));
  numcore::BatchStats stats;
  y = numcore::batchnorm2d(g_, y, param(bn + ".gamma"), param(bn + ".beta"),
                           model_.params().value(bn + ".mean"),
                           model_.params().value(bn + ".var"), mode_.training,
                           kBnEps, mode_.training ? &stats : nullptr);
  if (mode_.training && mode_.update_running) {
    pending_stats_.emplace_back(bn, std::move(stats));
  }
  return numcore::relu(g_, y);
}

BoundModel::Hidden BoundModel::f_init(const ObsBatch& obs) {
  const NetConfig& cfg = model_.config();
  Value features;
  bool have = false;

  if (cfg.uses_image()) {
    if (obs.image.empty()) throw ConfigError("configuration needs an image input");
    if (obs.image.shape().size() != 4 || obs.image.shape()[1] != 3 ||
        obs.image.shape()[2] != cfg.image_size ||
        obs.image.shape()[3] != cfg.image_size) {
      throw ConfigError("image batch must be [B,3,S,S]");
    }
    Value x = g_.constant(obs.image);
    for (int i = 0; i < model_.arch().enc_layers(); ++i) x = conv_block(x, i);
    features = numcore::reshape(g_, x, {obs.image.shape()[0], model_.arch().flat});
    have = true;
  }
  if (cfg.uses_joint()) {
    if (obs.joint.empty()) throw ConfigError("configuration needs a joint input");
    Value j = g_.constant(Model::normalize_joint(obs.joint));
    features = have ? numcore::concat_cols(g_, features, j) : j;
    have = true;
  }

  Value h = numcore::affine(g_, features, param("init.fc.w"), param("init.fc.b"));
  Value c = g_.constant(Tensor({h.shape()[0], model_.config().hidden}));
  return {h, c};
}

BoundModel::Hidden BoundModel::f_update(const Hidden& state, Value u) {
  Value emb = numcore::affine(g_, u, param("cmd.fc.w"), param("cmd.fc.b"));
  auto [h, c] = numcore::lstm_cell(g_, emb, state.h, state.c, param("lstm.wx"),
                                   param("lstm.wh"), param("lstm.b"));
  return {h, c};
}

Value BoundModel::f_task(Value h) {
  return numcore::affine(g_, h, param("task.fc.w"), param("task.fc.b"));
}

Value BoundModel::decode_image(Value h) {
  const Arch& arch = model_.arch();
  Value d = numcore::affine(g_, h, param("dec.fc.w"), param("dec.fc.b"));
  d = numcore::reshape(g_, d, {h.shape()[0], arch.enc_ch.back(), 2, 2});
  const int layers = static_cast<int>(arch.dec_ch.size()) - 1;
  for (int i = 0; i < layers; ++i) {
    const std::string tag = "dec.deconv" + std::to_string(i);
    d = numcore::deconv2d(g_, d, param(tag + ".w"), param(tag + ".b"),
                          arch.dec_out_pad[static_cast<size_t>(i)]);
    if (i + 1 < layers) {
      const std::string bn = "dec.bn" + std::to_string(i);
      numcore::BatchStats stats;
      d = numcore::batchnorm2d(g_, d, param(bn + ".gamma"), param(bn + ".beta"),
                               model_.params().value(bn + ".mean"),
                               model_.params().value(bn + ".var"), mode_.training,
                               kBnEps, mode_.training ? &stats : nullptr);
      if (mode_.training && mode_.update_running) {
        pending_stats_.emplace_back(bn, std::move(stats));
      }
      d = numcore::relu(g_, d);
    } else {
      d = numcore::sigmoid(g_, d);
    }
  }
  return d;
}

BoundModel::RobotPred BoundModel::f_robot(Value h) {
  const NetConfig& cfg = model_.config();
  if (!cfg.state_output) {
    throw ConfigError("f_robot is only defined for state-output (+) types");
  }
  RobotPred pred;
  if (cfg.uses_joint()) {
    pred.joint = numcore::affine(g_, h, param("robot.fc.w"), param("robot.fc.b"));
  }
  if (cfg.uses_image()) pred.image = decode_image(h);
  return pred;
}

BoundModel::Rollout BoundModel::rollout(const ObsBatch& obs,
                                        const std::vector<Tensor>& u_seq, int t,
                                        bool with_robot, bool u_requires_grad) {
  if (t < 1) throw std::invalid_argument("rollout needs t >= 1");
  if (static_cast<int>(u_seq.size()) < t) {
    throw std::invalid_argument("command sequence shorter than rollout");
  }
  Rollout out;
  Hidden state = f_init(obs);
  out.initial = state;
  for (int i = 0; i < t; ++i) {
    Value u = g_.leaf(u_seq[static_cast<size_t>(i)], u_requires_grad);
    out.commands.push_back(u);
    state = f_update(state, u);
    out.task.push_back(f_task(state.h));
    if (with_robot && model_.config().state_output) {
      out.robot.push_back(f_robot(state.h));
    }
  }
  return out;
}

void BoundModel::harvest_grads(Model& model) const {
  for (const auto& [name, v] : leaves_) {
    const Tensor* grad = g_.grad_if_any(v);
    if (grad != nullptr) model.params().grad(name).add_scaled(*grad, 1.0);
  }
}

void BoundModel::commit_running_stats(Model& model) const {
  for (const auto& [bn, stats] : pending_stats_) {
    Tensor& mean = model.params().value(bn + ".mean");
    Tensor& var = model.params().value(bn + ".var");
    for (Index c = 0; c < mean.size(); ++c) {
      mean[c] = kBnMomentum * mean[c] + (1.0 - kBnMomentum) * stats.mean[c];
      var[c] = kBnMomentum * var[c] + (1.0 - kBnMomentum) * stats.var[c];
    }
  }
}

}  // namespace dtxnet
