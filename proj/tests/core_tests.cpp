#include <bit>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdint>

#include "ecvr/nn.hpp"
#include "ecvr/optimizer.hpp"
#include "ecvr/rng.hpp"

using namespace ecvr;
using Catch::Approx;

TEST_CASE("bce matches hand values", "[nn]") {
  CHECK(bce(0.5, 1.0) == Approx(0.6931471805599453).epsilon(1e-12));
  CHECK(bce(1.0 - kBceEps, 1.0) == Approx(0.0).margin(1e-6));
  CHECK(bce(0.9, 0.0) == Approx(2.302585092994046).epsilon(1e-12));
  // clamp keeps the loss finite at the boundaries
  CHECK(std::isfinite(bce(0.0, 1.0)));
  CHECK(std::isfinite(bce(1.0, 0.0)));
}

TEST_CASE("leaky relu definition and derivative", "[nn]") {
  const double slope = 0.01;
  CHECK(leaky_relu(3.5, slope) == 3.5);
  CHECK(leaky_relu(-2.0, slope) == Approx(-0.02));
  CHECK(leaky_relu(0.0, slope) == 0.0);
  CHECK(leaky_relu_deriv(leaky_relu(3.5, slope), slope) == 1.0);
  CHECK(leaky_relu_deriv(leaky_relu(-2.0, slope), slope) == slope);
  // derivative at exactly zero pinned to 1
  CHECK(leaky_relu_deriv(0.0, slope) == 1.0);
}

TEST_CASE("sigmoid saturation stays strictly inside (0,1)", "[nn]") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(20.0) == Approx(1.0 - 2.0611536181902037e-9).epsilon(1e-12));
  Rng rng(99);
  for (int k = 0; k < 2000; ++k) {
    const double x = rng.uniform(-800.0, 800.0);
    const double p = sigmoid_strict(x);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
}

TEST_CASE("forward_tower examples", "[nn]") {
  Rng rng(7);
  StackCache cache;

  SECTION("zero parameters give 0.5") {
    DenseStack tower = DenseStack::make("t", {4, 1}, false, 0.01, rng);
    for (auto& l : tower.layers) std::fill(l.weight.values.begin(), l.weight.values.end(), 0.0);
    const std::vector<double> hidden{0.3, -1.0, 2.0, 0.7};
    CHECK(forward_tower(tower, hidden, cache) == 0.5);
  }

  SECTION("zero weights collapse to sigmoid(bias)") {
    DenseStack tower = DenseStack::make("t", {3, 1}, false, 0.01, rng);
    std::fill(tower.layers[0].weight.values.begin(), tower.layers[0].weight.values.end(), 0.0);
    tower.layers[0].bias.values[0] = 1.3;
    const std::vector<double> hidden{5.0, -2.0, 0.1};
    CHECK(forward_tower(tower, hidden, cache) == Approx(sigmoid(1.3)).epsilon(1e-15));
  }

  SECTION("large positive preactivation") {
    DenseStack tower = DenseStack::make("t", {1, 1}, false, 0.01, rng);
    tower.layers[0].weight.values[0] = 20.0;
    tower.layers[0].bias.values[0] = 0.0;
    const std::vector<double> hidden{1.0};
    CHECK(forward_tower(tower, hidden, cache) == Approx(1.0 - 2.0611536181902037e-9).epsilon(1e-9));
  }

  SECTION("dimension mismatch rejected") {
    DenseStack tower = DenseStack::make("t", {4, 1}, false, 0.01, rng);
    const std::vector<double> hidden{1.0, 2.0};
    CHECK_THROWS_AS(forward_tower(tower, hidden, cache), ConfigError);
  }
}

namespace {

SharedBottom make_bottom(int fields, int card, int emb, std::vector<int> stack_dims,
                         std::uint64_t seed) {
  Rng rng(seed);
  SharedBottom b;
  for (int f = 0; f < fields; ++f) b.fields.push_back(EmbeddingTable::make(f, card, emb, rng));
  std::vector<int> dims{fields * emb};
  dims.insert(dims.end(), stack_dims.begin(), stack_dims.end());
  b.stack = DenseStack::make("bottom", dims, true, 0.01, rng);
  return b;
}

}  // namespace

TEST_CASE("forward_bottom examples", "[nn]") {
  std::vector<double> concat;
  StackCache cache;

  SECTION("all-zero parameters give zero hidden vector") {
    SharedBottom b = make_bottom(2, 4, 3, {5}, 11);
    for (auto& f : b.fields) std::fill(f.table.values.begin(), f.table.values.end(), 0.0);
    const std::vector<Feature> feats{{0, 1}, {1, 3}};
    const auto hidden = forward_bottom(b, feats, concat, cache);
    for (double h : hidden) CHECK(h == 0.0);
  }

  SECTION("identity-like single-layer stack returns the embedding row") {
    SharedBottom b = make_bottom(1, 4, 3, {3}, 12);
    auto& layer = b.stack.layers[0];
    std::fill(layer.weight.values.begin(), layer.weight.values.end(), 0.0);
    for (int i = 0; i < 3; ++i) layer.weight.values[i * 3 + i] = 1.0;
    // embedding rows are in [-0.05, 0.05], so the identity map passes
    // through the positive branch scaling of leaky relu only when >= 0;
    // make the row non-negative to keep it exact
    for (double& v : b.fields[0].table.values) v = std::fabs(v);
    const std::vector<Feature> feats{{0, 2}};
    const auto hidden = forward_bottom(b, feats, concat, cache);
    const auto row = b.fields[0].row(2);
    for (int i = 0; i < 3; ++i) CHECK(hidden[i] == row[i]);
  }

  SECTION("out-of-range index rejected") {
    SharedBottom b = make_bottom(2, 4, 3, {5}, 13);
    const std::vector<Feature> feats{{0, 4}, {1, 0}};
    CHECK_THROWS_AS(forward_bottom(b, feats, concat, cache), DataError);
  }

  SECTION("wrong field order rejected") {
    SharedBottom b = make_bottom(2, 4, 3, {5}, 13);
    const std::vector<Feature> feats{{1, 0}, {0, 0}};
    CHECK_THROWS_AS(forward_bottom(b, feats, concat, cache), DataError);
  }
}

TEST_CASE("forward_bottom golden vector", "[nn][golden]") {
  SharedBottom b = make_bottom(2, 5, 3, {4, 3}, 42);
  const std::vector<Feature> feats{{0, 2}, {1, 4}};
  std::vector<double> concat;
  StackCache cache;
  const auto hidden = forward_bottom(b, feats, concat, cache);
  REQUIRE(hidden.size() == 3);
  // frozen from the first verified run; regenerated bit-identically
  const std::uint64_t golden[3] = {0x3f6c75180d271affULL, 0x3f7102fb0cd5f484ULL,
                                   0xbedb2daba55f3441ULL};
  for (int i = 0; i < 3; ++i) {
    INFO("component " << i << " = " << hidden[i] << " bits "
                      << std::bit_cast<std::uint64_t>(hidden[i]));
    CHECK(std::bit_cast<std::uint64_t>(hidden[i]) == golden[i]);
  }
}

TEST_CASE("dense backward closed form: logistic regression", "[nn][grad]") {
  // p = sigmoid(w*x + b), bce against y: dL/dw = (p - y) x, dL/db = p - y
  Rng rng(3);
  DenseStack stack = DenseStack::make("lr", {1, 1}, false, 0.01, rng);
  stack.layers[0].weight.values[0] = 0.8;
  stack.layers[0].bias.values[0] = -0.2;
  const double x = 1.7, y = 1.0;
  StackCache cache;
  const std::vector<double> in{x};
  const double p = sigmoid_strict(dense_forward(stack, in, cache)[0]);
  const double d_logit = bce_dp(p, y) * p * (1.0 - p);
  std::vector<double> d_in;
  const double d_out[1] = {d_logit};
  dense_backward(stack, cache, d_out, d_in);
  CHECK(stack.layers[0].weight.grad[0] == Approx((p - y) * x).epsilon(1e-12));
  CHECK(stack.layers[0].bias.grad[0] == Approx(p - y).epsilon(1e-12));
  CHECK(d_in[0] == Approx((p - y) * 0.8).epsilon(1e-12));
}

TEST_CASE("adagrad decay step", "[optimizer]") {
  ParamTensor p("p", {2});
  p.values = {1.0, -2.0};
  std::vector<ParamTensor*> params{&p};

  SECTION("zero gradient leaves parameters unchanged") {
    AdagradDecay opt;
    opt.attach(params);
    opt.step(params);
    CHECK(p.values[0] == 1.0);
    CHECK(p.values[1] == -2.0);
  }

  SECTION("first step is roughly a signed learning-rate step") {
    AdagradDecay opt;
    opt.learning_rate = 0.05;
    opt.decay = 1.0;
    opt.epsilon = 1e-8;
    opt.initial_accumulator = 0.0;  // cold start: first step is lr-sized
    opt.attach(params);
    p.grad = {0.5, -0.25};
    opt.step(params);
    CHECK(p.values[0] == Approx(1.0 - 0.05 * 0.5 / std::sqrt(0.25 + 1e-8)).epsilon(1e-12));
    CHECK(p.values[1] == Approx(-2.0 + 0.05 * 0.25 / std::sqrt(0.0625 + 1e-8)).epsilon(1e-12));
    CHECK(p.grad[0] == 0.0);  // gradients zeroed after the step
    CHECK(p.grad[1] == 0.0);
  }

  SECTION("two equal-gradient steps shrink by sqrt(2)") {
    AdagradDecay opt;
    opt.learning_rate = 0.1;
    opt.decay = 1.0;
    opt.epsilon = 1e-12;
    opt.initial_accumulator = 0.0;
    opt.attach(params);
    const double g = 0.5;
    p.values = {0.0, 0.0};
    p.grad = {g, g};
    opt.step(params);
    const double step1 = -p.values[0];
    p.grad = {g, g};
    opt.step(params);
    const double step2 = -p.values[0] - step1;
    // hand recursion: acc = g^2 then 2 g^2, steps lr/1 and lr/sqrt(2)
    CHECK(step1 == Approx(0.1 * g / std::sqrt(g * g + 1e-12)).epsilon(1e-10));
    CHECK(step2 == Approx(step1 / std::sqrt(2.0)).epsilon(1e-6));
  }

  SECTION("warm accumulator damps the first step") {
    AdagradDecay opt;
    opt.learning_rate = 0.1;
    opt.decay = 1.0;
    opt.epsilon = 1e-12;
    opt.initial_accumulator = 1.0;
    opt.attach(params);
    p.values = {0.0, 0.0};
    p.grad = {0.5, 0.0};
    opt.step(params);
    CHECK(-p.values[0] == Approx(0.1 * 0.5 / std::sqrt(1.0 + 0.25 + 1e-12)).epsilon(1e-12));
  }

  SECTION("decay shrinks the accumulator") {
    AdagradDecay opt;
    opt.learning_rate = 0.1;
    opt.decay = 0.5;
    opt.epsilon = 1e-12;
    opt.initial_accumulator = 0.0;
    opt.attach(params);
    p.values = {0.0};
    p.values.resize(2, 0.0);
    p.grad = {1.0, 0.0};
    opt.step(params);
    p.grad = {1.0, 0.0};
    opt.step(params);
    // acc after two steps: 0.5*1 + 1 = 1.5 rather than 2
    const double expected_second = 0.1 / std::sqrt(1.5 + 1e-12);
    const double first = 0.1 / std::sqrt(1.0 + 1e-12);
    CHECK(-p.values[0] == Approx(first + expected_second).epsilon(1e-10));
  }
}

TEST_CASE("rng substreams are deterministic and distinct", "[rng]") {
  Rng a(substream_seed(123, "alpha"));
  Rng b(substream_seed(123, "alpha"));
  Rng c(substream_seed(123, "beta"));
  bool all_equal = true;
  bool any_diff_c = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_diff_c = any_diff_c || va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff_c);
}

TEST_CASE("exponential draws are strictly positive with the right mean", "[rng]") {
  Rng rng(5);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.exponential(1.5);
    REQUIRE(x > 0.0);
    sum += x;
  }
  CHECK(sum / n == Approx(1.5).epsilon(0.02));
}
