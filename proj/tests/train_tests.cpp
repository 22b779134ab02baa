#include <catch2/catch_amalgamated.hpp>

#include "ecvr/attributed_io.hpp"
#include "ecvr/sim.hpp"
#include "ecvr/train.hpp"
#include "support/test_util.hpp"

using namespace ecvr;
using Catch::Approx;

namespace {

WindowConfig windows22() {
  WindowConfig wc;
  wc.conversion = day_window(3);
  wc.refund = day_window(3);
  wc.conversion_steps = {day_window(1), day_window(2)};
  wc.refund_steps = {day_window(1), day_window(2)};
  return wc;
}

AttributedDataset tiny_dataset(std::uint64_t seed, double cutoff) {
  SimConfig c;
  c.num_fields = 3;
  c.cardinality_per_field = 8;
  c.horizon_days = 10;
  c.clicks_per_day = 600;
  c.target_cvr = 0.25;
  c.target_rfr = 0.35;
  c.seed = seed;
  const auto events = simulate(build_ground_truth(c));
  return attribute_all(events, cutoff, windows22(), DatasetMeta{3, 8, 10, seed});
}

std::vector<std::vector<double>> snapshot(TrainedModel& model) {
  std::vector<std::vector<double>> out;
  for (auto& b : model.bundles)
    for (ParamTensor* p : b.params()) out.push_back(p->values);
  return out;
}

}  // namespace

TEST_CASE("training on an empty dataset leaves parameters unchanged", "[train]") {
  TrainedModel model = build_model(ModelVariant::Ecad, windows22(), NetSizes{}, 3, 8, 5);
  const auto before = snapshot(model);
  train_bundle(model.bundles[0], {}, TrainParams{});
  CHECK(snapshot(model) == before);
}

TEST_CASE("training on fully masked samples leaves parameters unchanged", "[train]") {
  const WindowConfig wc = windows22();
  TrainedModel model = build_model(ModelVariant::Ecad, wc, NetSizes{}, 3, 8, 5);
  const auto before = snapshot(model);

  Rng rng(31);
  std::vector<LabeledSample> darks;
  for (int i = 0; i < 300; ++i) {
    ClickEvent e = test::random_event(3, 8, rng);
    e.click_time = 4.9;
    e.conversion_delay = kInf;
    darks.push_back(attribute(e, 4.9, wc));  // clicked at the cutoff: all masks 0
    REQUIRE(darks.back().mask_bits == 0);
  }
  train_bundle(model.bundles[0], darks, TrainParams{});
  CHECK(snapshot(model) == before);
}

TEST_CASE("same seed and data give bit-identical models", "[train]") {
  const AttributedDataset ds = tiny_dataset(9, 9.0);
  for (ModelVariant v : {ModelVariant::Ecad, ModelVariant::ImDefer}) {
    TrainedModel a = train_variant(v, ds.samples, ds.cutoff, ds.windows, NetSizes{}, 3, 8,
                                   TrainParams{}, 1234);
    TrainedModel b = train_variant(v, ds.samples, ds.cutoff, ds.windows, NetSizes{}, 3, 8,
                                   TrainParams{}, 1234);
    CHECK(snapshot(a) == snapshot(b));
    TrainedModel c = train_variant(v, ds.samples, ds.cutoff, ds.windows, NetSizes{}, 3, 8,
                                   TrainParams{}, 1235);
    CHECK(snapshot(a) != snapshot(c));
  }
}

TEST_CASE("training moves the loss downhill", "[train]") {
  const AttributedDataset ds = tiny_dataset(10, 9.0);
  TrainedModel model = build_model(ModelVariant::Esmm, ds.windows, NetSizes{}, 3, 8, 77);
  ModelBundle& bundle = model.bundles[0];

  std::vector<LabeledSample> eligible;
  for (const auto& s : ds.samples)
    if (eligible_for_bundle(s, bundle.arch, ds.windows, ds.cutoff)) eligible.push_back(s);
  REQUIRE(eligible.size() > 500);

  BundleState st;
  auto dataset_loss = [&] {
    double total = 0.0;
    for (const auto& s : eligible) {
      bundle_forward(bundle, s.event.features, st);
      total += bundle_loss(bundle, s, st);
    }
    return total / eligible.size();
  };
  const double before = dataset_loss();
  TrainParams tp;
  tp.epochs = 2;
  train_bundle(bundle, eligible, tp);
  CHECK(dataset_loss() < before);
}

TEST_CASE("im trained submodels equal the trained base models", "[train]") {
  const AttributedDataset ds = tiny_dataset(11, 9.0);
  const std::uint64_t seed = 2718;
  TrainedModel im = train_variant(ModelVariant::Im, ds.samples, ds.cutoff, ds.windows,
                                  NetSizes{}, 3, 8, TrainParams{}, seed);
  TrainedModel cvr = train_variant(ModelVariant::CvrBase, ds.samples, ds.cutoff, ds.windows,
                                   NetSizes{}, 3, 8, TrainParams{}, seed);
  TrainedModel rfr = train_variant(ModelVariant::RfrBase, ds.samples, ds.cutoff, ds.windows,
                                   NetSizes{}, 3, 8, TrainParams{}, seed);
  auto im_cvr = im.bundle("cvr").params();
  auto base_cvr = cvr.bundles[0].params();
  for (std::size_t i = 0; i < im_cvr.size(); ++i)
    CHECK(im_cvr[i]->values == base_cvr[i]->values);
  auto im_rfr = im.bundle("rfr").params();
  auto base_rfr = rfr.bundles[0].params();
  for (std::size_t i = 0; i < im_rfr.size(); ++i)
    CHECK(im_rfr[i]->values == base_rfr[i]->values);
}

TEST_CASE("one training step follows the summed batch gradient", "[train]") {
  // single batch, lr small: parameters move opposite the accumulated grads
  const AttributedDataset ds = tiny_dataset(12, 9.0);
  TrainedModel model = build_model(ModelVariant::CvrBase, ds.windows, NetSizes{}, 3, 8, 55);
  ModelBundle& bundle = model.bundles[0];

  std::vector<LabeledSample> batch(ds.samples.begin(), ds.samples.begin() + 64);
  BundleState st;
  for (ParamTensor* p : bundle.params()) p->zero_grad();
  for (const auto& s : batch) {
    bundle_forward(bundle, s.event.features, st);
    bundle_backward(bundle, s, st);
  }
  std::vector<std::vector<double>> grads;
  for (ParamTensor* p : bundle.params()) grads.push_back(p->grad);
  const auto before = snapshot(model);

  for (ParamTensor* p : bundle.params()) p->zero_grad();
  TrainParams tp;
  tp.batch_size = 64;
  train_bundle(bundle, batch, tp);

  std::size_t t = 0;
  bool direction_ok = true;
  for (ParamTensor* p : bundle.params()) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double moved = p->values[i] - before[t][i];
      if (grads[t][i] != 0.0 && moved * grads[t][i] > 0.0) direction_ok = false;
      if (grads[t][i] == 0.0 && moved != 0.0) direction_ok = false;
    }
    ++t;
  }
  CHECK(direction_ok);
}
