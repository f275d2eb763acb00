#include "dtxnet/loss.hpp"

namespace dtxnet {

double task_loss(double target, double pred, double alpha) {
  const double d = target - pred;
  return target > 0.0 ? alpha * d * d : d * d;
}

Value task_loss_sq(Graph& g, Value pred, const Tensor& target, double alpha) {
  numcore::check_same_shape(pred.tensor(), target, "task_loss_sq");
  Tensor weights(target.shape());
  for (Index i = 0; i < target.size(); ++i) {
    weights[i] = target[i] > 0.0 ? alpha : 1.0;
  }
  Value diff = numcore::sub(g, pred, g.constant(target));
  return numcore::mul(g, numcore::mul(g, diff, diff), g.constant(weights));
}

LossTerms train_loss(BoundModel& bm, const WindowBatch& batch) {
  Graph& g = bm.graph();
  const NetConfig& cfg = bm.model().config();
  const int t = batch.steps();
  if (t < 1) throw DataError("empty window batch");
  const Index b = batch.batch();
  const bool with_j = cfg.state_output && cfg.uses_joint();
  const bool with_i = cfg.state_output && cfg.uses_image();

  auto ro = bm.rollout(batch.obs, batch.commands, t, cfg.state_output);

  Value o_sum, j_sum, i_sum;
  for (int i = 0; i < t; ++i) {
    const size_t s = static_cast<size_t>(i);
    Value o_step = numcore::sum_all(
        g, task_loss_sq(g, ro.task[s], batch.task_targets[s], cfg.alpha));
    o_sum = i == 0 ? o_step : numcore::add(g, o_sum, o_step);
    if (with_j) {
      Value d = numcore::sub(g, ro.robot[s].joint,
                             g.constant(batch.joint_targets[s]));
      Value step = numcore::sum_all(g, numcore::mul(g, d, d));
      j_sum = i == 0 ? step : numcore::add(g, j_sum, step);
    }
    if (with_i) {
      Value d = numcore::sub(g, ro.robot[s].image,
                             g.constant(batch.image_targets[s]));
      Value step = numcore::sum_all(g, numcore::mul(g, d, d));
      i_sum = i == 0 ? step : numcore::add(g, i_sum, step);
    }
  }

  const double per_step = 1.0 / (static_cast<double>(t) * static_cast<double>(b));
  LossTerms lt;
  lt.l_o = numcore::scale(g, o_sum, per_step);
  lt.total = numcore::scale(g, lt.l_o, cfg.w_o);
  if (with_j) {
    lt.l_j = numcore::scale(g, j_sum, per_step / static_cast<double>(cfg.joint_dim));
    lt.total = numcore::add(g, lt.total, numcore::scale(g, lt.l_j, cfg.w_j));
  }
  if (with_i) {
    const double px = static_cast<double>(cfg.image_size) * cfg.image_size;
    lt.l_i = numcore::scale(g, i_sum, per_step / px);
    lt.total = numcore::add(g, lt.total, numcore::scale(g, lt.l_i, cfg.w_i));
  }
  return lt;
}

}  // namespace dtxnet
