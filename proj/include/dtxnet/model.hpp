#pragma once

#include <map>
#include <string>
#include <vector>

#include "dtxnet/config.hpp"
#include "numcore/graph.hpp"
#include "numcore/ops.hpp"
#include "numcore/params.hpp"

namespace dtxnet {

using numcore::Graph;
using numcore::Index;
using numcore::ParamStore;
using numcore::Tensor;
using numcore::Value;

// Encoder/decoder geometry derived from the frame size. The encoder halves
// the spatial extent until 2x2; the decoder mirrors it back exactly.
struct Arch {
  std::vector<Index> enc_spatial;  // image_size, ..., 2
  std::vector<Index> enc_ch;       // 3, 4, 8, ..., capped at 64
  Index flat = 0;                  // enc_ch.back() * 4
  std::vector<Index> dec_ch;       // enc channels mirrored, ending at 1
  std::vector<Index> dec_out_pad;  // per decoder layer

  int enc_layers() const { return static_cast<int>(enc_ch.size()) - 1; }
};

Arch make_arch(int image_size);

// Observations for a batch. `joint` is raw units [B,6]; `image` is
// [B,3,S,S] holding the binary frame and the two flow planes. Components
// not used by the configuration may be left empty.
struct ObsBatch {
  Tensor joint;
  Tensor image;
};

struct EvalMode {
  bool training = false;
  bool update_running = false;  // fold batch stats into running averages
};

class Model {
 public:
  Model(NetConfig cfg, std::uint64_t seed);

  const NetConfig& config() const { return cfg_; }
  const Arch& arch() const { return arch_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Scales a raw [B,6] joint batch to unit range (see kAngleScale & co).
  static Tensor normalize_joint(const Tensor& raw);

 private:
  void build_params(std::uint64_t seed);

  NetConfig cfg_;
  Arch arch_;
  ParamStore params_;
};

// Builds the network's operations on one graph. Reuses one leaf per
// parameter so gradients accumulate across timesteps; in training mode it
// records batch-norm batch statistics for later folding into the running
// averages (the model itself stays untouched until the caller commits).
class BoundModel {
 public:
  BoundModel(const Model& model, Graph& graph, EvalMode mode);

  struct Hidden {
    Value h, c;
  };
  struct RobotPred {
    Value joint;  // normalized units, [B,6]; invalid when unused
    Value image;  // [B,1,S,S]; invalid when unused
  };
  struct Rollout {
    Hidden initial;
    std::vector<Value> task;        // T entries of [B,1]
    std::vector<RobotPred> robot;   // T entries when requested, else empty
    std::vector<Value> commands;    // the T command leaves
  };

  Hidden f_init(const ObsBatch& obs);
  Hidden f_update(const Hidden& state, Value u);
  Value f_task(Value h);
  RobotPred f_robot(Value h);

  Rollout rollout(const ObsBatch& obs, const std::vector<Tensor>& u_seq, int t,
                  bool with_robot, bool u_requires_grad = false);

  // Add this graph's parameter gradients into the store (after backward).
  void harvest_grads(Model& model) const;
  // Fold recorded batch statistics into the running buffers.
  void commit_running_stats(Model& model) const;

  Graph& graph() { return g_; }
  const Model& model() const { return model_; }

 private:
  Value param(const std::string& name);
  Value conv_block(Value x, int layer);    // conv + bn + relu
  Value decode_image(Value h);

  const Model& model_;
  Graph& g_;
  EvalMode mode_;
  std::map<std::string, Value> leaves_;
  std::vector<std::pair<std::string, numcore::BatchStats>> pending_stats_;
};

}  // namespace dtxnet
