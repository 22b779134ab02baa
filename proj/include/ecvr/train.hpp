#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "ecvr/model.hpp"
#include "ecvr/optimizer.hpp"

namespace ecvr {

struct TrainParams {
  int batch_size = 256;
  int epochs = 1;
  double learning_rate = 0.05;
  double accumulator_decay = 0.9999;
  double adagrad_epsilon = 1e-8;
  double initial_accumulator = 0.1;
};

// Single-threaded mini-batch pass in the given sample order: forward +
// masked-loss backward over each batch, then one optimizer step. Gradients
// accumulate by summation across the batch. Returns the summed loss of the
// final epoch.
inline double train_bundle(ModelBundle& bundle, std::span<const LabeledSample> samples,
                           const TrainParams& tp) {
  AdagradDecay opt;
  opt.learning_rate = tp.learning_rate;
  opt.decay = tp.accumulator_decay;
  opt.epsilon = tp.adagrad_epsilon;
  opt.initial_accumulator = tp.initial_accumulator;
  const std::vector<ParamTensor*> params = bundle.params();
  opt.attach(params);

  BundleState st;
  double epoch_loss = 0.0;
  for (int epoch = 0; epoch < tp.epochs; ++epoch) {
    epoch_loss = 0.0;
    std::size_t pos = 0;
    while (pos < samples.size()) {
      const std::size_t end = std::min(pos + static_cast<std::size_t>(tp.batch_size),
                                       samples.size());
      for (std::size_t i = pos; i < end; ++i) {
        bundle_forward(bundle, samples[i].event.features, st);
        epoch_loss += bundle_backward(bundle, samples[i], st);
      }
      opt.step(params);
      pos = end;
    }
  }
  return epoch_loss;
}

// Builds the variant's bundle(s) and trains each on its eligible slice of
// the attributed dataset, in click-time order. `cutoff` must be the cutoff
// the dataset was attributed at.
inline TrainedModel train_variant(ModelVariant v, std::span<const LabeledSample> samples,
                                  double cutoff, const WindowConfig& wc, const NetSizes& sizes,
                                  int num_fields, int cardinality, const TrainParams& tp,
                                  std::uint64_t master_seed) {
  TrainedModel model = build_model(v, wc, sizes, num_fields, cardinality, master_seed);
  for (ModelBundle& bundle : model.bundles) {
    std::vector<LabeledSample> slice;
    slice.reserve(samples.size());
    for (const LabeledSample& s : samples) {
      if (eligible_for_bundle(s, bundle.arch, wc, cutoff)) slice.push_back(s);
    }
    train_bundle(bundle, slice, tp);
  }
  return model;
}

}  // namespace ecvr
