#include "dtxnet/train.hpp"

#include <algorithm>

#include "numcore/rng.hpp"

namespace dtxnet {

namespace {

double scalar_or_zero(const Value& v) {
  return v.valid() ? v.tensor()[0] : 0.0;
}

}  // namespace

WindowBatch make_window_batch(const EpisodeData& data, const NetConfig& cfg,
                              const std::vector<int>& starts) {
  const int t = cfg.t_train;
  const Index b = static_cast<Index>(starts.size());
  const Index ss = static_cast<Index>(cfg.image_size) * cfg.image_size;

  WindowBatch wb;
  if (cfg.uses_joint()) wb.obs.joint = Tensor({b, 6});
  if (cfg.uses_image()) wb.obs.image = Tensor({b, 3, cfg.image_size, cfg.image_size});
  for (Index r = 0; r < b; ++r) {
    const int tick = starts[static_cast<size_t>(r)];
    if (cfg.uses_joint()) {
      for (Index j = 0; j < 6; ++j) {
        wb.obs.joint[r * 6 + j] = data.joints[static_cast<size_t>(tick) * 6 + j];
      }
    }
    if (cfg.uses_image()) {
      double* img = wb.obs.image.data() + r * 3 * ss;
      const std::uint8_t* fr = data.frames.data() + static_cast<size_t>(tick) * ss;
      const float* fl = data.flows.data() + static_cast<size_t>(tick) * 2 * ss;
      for (Index i = 0; i < ss; ++i) img[i] = fr[i];
      for (Index i = 0; i < 2 * ss; ++i) img[ss + i] = fl[i];
    }
  }

  const bool with_j = cfg.state_output && cfg.uses_joint();
  const bool with_i = cfg.state_output && cfg.uses_image();
  for (int step = 0; step < t; ++step) {
    Tensor u({b, 2});
    Tensor task({b, 1});
    Tensor joints = with_j ? Tensor({b, 6}) : Tensor();
    Tensor images =
        with_i ? Tensor({b, 1, cfg.image_size, cfg.image_size}) : Tensor();
    for (Index r = 0; r < b; ++r) {
      const int tick = starts[static_cast<size_t>(r)] + step;
      u[r * 2 + 0] = data.commands[static_cast<size_t>(tick) * 2 + 0];
      u[r * 2 + 1] = data.commands[static_cast<size_t>(tick) * 2 + 1];
      task[r] = data.tasks[static_cast<size_t>(tick) + 1];
      if (with_j) {
        for (Index j = 0; j < 6; ++j) {
          joints[r * 6 + j] =
              data.joints[(static_cast<size_t>(tick) + 1) * 6 + j];
        }
      }
      if (with_i) {
        const std::uint8_t* fr =
            data.frames.data() + (static_cast<size_t>(tick) + 1) * ss;
        double* dst = images.data() + r * ss;
        for (Index i = 0; i < ss; ++i) dst[i] = fr[i];
      }
    }
    wb.commands.push_back(std::move(u));
    wb.task_targets.push_back(std::move(task));
    if (with_j) wb.joint_targets.push_back(Model::normalize_joint(joints));
    if (with_i) wb.image_targets.push_back(std::move(images));
  }
  return wb;
}

TrainResult train(Model& model, const EpisodeData& data, const TrainOptions& opt,
                  const EpochCallback& on_epoch) {
  data.require_consistent();
  const NetConfig& cfg = model.config();
  if (data.image_size != cfg.image_size) {
    throw DataError("dataset frame size does not match the model");
  }
  const int t = cfg.t_train;
  const int n = data.count();
  const int n_train = static_cast<int>(n * (1.0 - opt.val_fraction));

  // Window starting at tick s consumes ticks [s, s+t]; validation windows
  // live entirely in the held-out tail so none of their ticks leak.
  std::vector<int> train_starts, val_starts;
  for (int s = 0; s + t < n_train; ++s) train_starts.push_back(s);
  for (int s = n_train; s + t < n; ++s) val_starts.push_back(s);
  if (train_starts.empty()) throw DataError("dataset shorter than one window");
  if (val_starts.empty()) throw DataError("validation split has no full window");

  numcore::Rng rng(opt.seed);
  numcore::AdamState adam(opt.adam);

  TrainResult result;
  result.best_val_task = std::numeric_limits<double>::infinity();
  ParamStore best_params = model.params();

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    rng.shuffle(train_starts);
    EpochStats stats;
    double seen = 0;
    for (size_t pos = 0; pos < train_starts.size(); pos += opt.batch_size) {
      const size_t take =
          std::min<size_t>(opt.batch_size, train_starts.size() - pos);
      if (take < 2) continue;  // batch norm needs a real batch
      std::vector<int> starts(train_starts.begin() + static_cast<long>(pos),
                              train_starts.begin() + static_cast<long>(pos + take));
      WindowBatch wb = make_window_batch(data, cfg, starts);

      Graph g;
      BoundModel bm(model, g, {true, true});
      LossTerms lt = train_loss(bm, wb);
      g.backward(lt.total);
      model.params().zero_grads();
      bm.harvest_grads(model);
      bm.commit_running_stats(model);
      numcore::adam_step(model.params(), adam);

      const double w = static_cast<double>(take);
      stats.train_total += w * lt.total.tensor()[0];
      stats.train_j += w * scalar_or_zero(lt.l_j);
      stats.train_i += w * scalar_or_zero(lt.l_i);
      stats.train_o += w * scalar_or_zero(lt.l_o);
      seen += w;
    }
    stats.train_total /= seen;
    stats.train_j /= seen;
    stats.train_i /= seen;
    stats.train_o /= seen;

    double vseen = 0;
    for (size_t pos = 0; pos < val_starts.size(); pos += opt.batch_size) {
      const size_t take = std::min<size_t>(opt.batch_size, val_starts.size() - pos);
      std::vector<int> starts(val_starts.begin() + static_cast<long>(pos),
                              val_starts.begin() + static_cast<long>(pos + take));
      WindowBatch wb = make_window_batch(data, cfg, starts);
      Graph g;
      g.set_finite_checks(false);  // pure evaluation, checked below
      BoundModel bm(model, g, {false, false});
      LossTerms lt = train_loss(bm, wb);
      const double w = static_cast<double>(take);
      stats.val_total += w * lt.total.tensor()[0];
      stats.val_j += w * scalar_or_zero(lt.l_j);
      stats.val_i += w * scalar_or_zero(lt.l_i);
      stats.val_o += w * scalar_or_zero(lt.l_o);
      vseen += w;
    }
    stats.val_total /= vseen;
    stats.val_j /= vseen;
    stats.val_i /= vseen;
    stats.val_o /= vseen;
    if (!std::isfinite(stats.val_o)) {
      throw numcore::NumericError("validation loss became non-finite");
    }

    result.curve.push_back(stats);
    if (stats.val_o < result.best_val_task) {
      result.best_val_task = stats.val_o;
      result.best_epoch = epoch;
      best_params = model.params();
    }
    if (on_epoch) on_epoch(epoch, stats);
  }

  model.params() = best_params;
  return result;
}

}  // namespace dtxnet
