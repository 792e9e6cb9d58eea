#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nwc/models.hpp"
#include "nwc/rng.hpp"

using namespace nwc;

namespace {

Tensor random_input(int t_in, int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Tensor x({t_in, h, w});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform();
  return x;
}

ModelSpec small_spec(Family family, int t_in, int t_out, std::uint64_t seed) {
  ModelSpec spec;
  spec.family = family;
  spec.t_in = t_in;
  spec.t_out = t_out;
  spec.seed = seed;
  spec.stacked.kernels = {3, 3};
  spec.stacked.hidden_channels = 4;
  spec.unet.depth = 2;
  spec.unet.base_channels = 2;
  spec.rec.hidden_channels = 4;
  spec.rec.state_channels = 4;
  spec.reduce.lstm_hidden = 8;
  return spec;
}

// Projection loss L = sum_i w_i * y_i; its output gradient is just w, which
// makes the finite-difference oracle a pure test of backward().
double projected_loss(Model& model, const Tensor& x, const Tensor& w) {
  const Tensor y = model.forward(x);
  double loss = 0;
  for (std::size_t i = 0; i < y.size(); ++i) loss += w[i] * y[i];
  return loss;
}

void gradient_check(Model& model, int h, int w_dim, std::uint64_t seed,
                    int samples = 24) {
  const Tensor x = random_input(model.spec().t_in, h, w_dim, seed);
  Rng rng(seed + 1);
  Tensor w({model.spec().t_out, h, w_dim});
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1.0, 1.0);

  model.zero_grad();
  projected_loss(model, x, w);
  model.backward(w);

  std::vector<Param*> params = model.params();
  std::size_t total = 0;
  for (Param* p : params) total += p->size();
  REQUIRE(total >= 20);

  const double step = 1e-3;
  int checked = 0;
  for (int attempt = 0; attempt < 4 * samples && checked < samples; ++attempt) {
    Param* p = params[static_cast<std::size_t>(rng.uniform_int(
        0, static_cast<std::int64_t>(params.size()) - 1))];
    const std::size_t idx = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(p->size()) - 1));
    const double saved = p->value[idx];
    const auto central = [&](double h) {
      p->value[idx] = saved + h;
      const double up = projected_loss(model, x, w);
      p->value[idx] = saved - h;
      const double down = projected_loss(model, x, w);
      p->value[idx] = saved;
      return (up - down) / (2 * h);
    };
    const double numeric = central(step);
    const double analytic = p->grad[idx];
    const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    // the loss is piecewise smooth (relu, maxpool); a sample point whose
    // difference quotient is step-dependent straddles a kink, where central
    // differences say nothing about the one-sided derivative — resample
    if (std::abs(numeric - central(step / 4)) / scale > 1e-4) continue;
    INFO(p->name << "[" << idx << "] analytic=" << analytic
                 << " numeric=" << numeric);
    CHECK(std::abs(analytic - numeric) / scale < 1e-3);
    ++checked;
  }
  CHECK(checked >= 20);
}

std::size_t conv_params(int c_in, int c_out, int kh, int kw = -1) {
  if (kw < 0) kw = kh;
  return static_cast<std::size_t>(c_out) * c_in * kh * kw + c_out;
}

}  // namespace

TEST_CASE("Conv2d matches a direct-convolution oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const int c_in = 1 + static_cast<int>(rng.uniform_int(0, 2));
    const int c_out = 1 + static_cast<int>(rng.uniform_int(0, 2));
    const int k = 1 + 2 * static_cast<int>(rng.uniform_int(0, 2));  // 1,3,5
    const int h = 4 + static_cast<int>(rng.uniform_int(0, 4));
    const int w = 4 + static_cast<int>(rng.uniform_int(0, 4));

    Rng init(trial + 9);
    Conv2d conv("c", c_in, c_out, k, k, init);
    Param* weight = conv.params()[0];
    Param* bias = conv.params()[1];
    for (double& v : bias->value) v = rng.uniform(-1, 1);

    Tensor x({c_in, h, w});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1, 1);
    const Tensor y = conv.forward(x);
    REQUIRE(y.shape() == std::vector<int>{c_out, h, w});

    // direct sum with explicit zero padding
    const int pad = k / 2;
    for (int co = 0; co < c_out; ++co)
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          double acc = bias->value[static_cast<std::size_t>(co)];
          for (int ci = 0; ci < c_in; ++ci)
            for (int i = 0; i < k; ++i)
              for (int j = 0; j < k; ++j) {
                const int rr = r + i - pad, cc = c + j - pad;
                if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                acc += weight->value[((static_cast<std::size_t>(co) * c_in + ci) * k + i) * k + j] *
                       x(ci, rr, cc);
              }
          CHECK_THAT(y(co, r, c), Catch::Matchers::WithinAbs(acc, 1e-12));
        }
  }
}

TEST_CASE("UpsampleNearest2d backward is the adjoint of forward") {
  Rng rng(5);
  UpsampleNearest2d up(2);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor x({2, 3, 4});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1, 1);
    Tensor y({2, 6, 8});
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = rng.uniform(-1, 1);

    const Tensor ax = up.forward(x);
    const Tensor aty = up.backward(y);
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < ax.size(); ++i) lhs += ax[i] * y[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * aty[i];
    CHECK_THAT(lhs, Catch::Matchers::WithinRel(rhs, 1e-12));
  }
}

TEST_CASE("MaxPool2d picks the maximum and routes its gradient") {
  MaxPool2d pool(2, 2);
  Tensor x({1, 2, 4});
  const double vals[8] = {1, 5, 2, 2, 3, 0, 2, 9};
  for (int i = 0; i < 8; ++i) x[static_cast<std::size_t>(i)] = vals[i];
  const Tensor y = pool.forward(x);
  REQUIRE(y.shape() == std::vector<int>{1, 1, 2});
  CHECK(y[0] == 5.0);
  CHECK(y[1] == 9.0);

  Tensor g({1, 1, 2});
  g[0] = 10;
  g[1] = 20;
  const Tensor dx = pool.backward(g);
  CHECK(dx[1] == 10.0);  // position of the 5
  CHECK(dx[7] == 20.0);  // position of the 9
  double total = 0;
  for (std::size_t i = 0; i < dx.size(); ++i) total += dx[i];
  CHECK(total == 30.0);
}

TEST_CASE("every family maps (t_in,H,W) to (t_out,H,W) probabilities") {
  const Family families[] = {Family::stacked_conv, Family::unet,
                             Family::rec_encdec, Family::reduce_lstm};
  const int side = 16;
  for (Family family : families)
    for (int t_in : {1, 2, 4})
      for (int t_out : {1, 3, 6}) {
        ModelSpec spec = small_spec(family, t_in, t_out, 42);
        auto model = build(spec, GridShape{side, side, 4.5});
        const Tensor y =
            model->forward(random_input(t_in, side, side, 7 * t_in + t_out));
        INFO(to_string(family) << " t_in=" << t_in << " t_out=" << t_out);
        REQUIRE(y.shape() == std::vector<int>{t_out, side, side});
        for (std::size_t i = 0; i < y.size(); ++i) {
          CHECK(y[i] >= 0.0);
          CHECK(y[i] <= 1.0);
        }
      }
}

TEST_CASE("model input shape is validated") {
  ModelSpec spec = small_spec(Family::stacked_conv, 4, 6, 1);
  auto model = build(spec, GridShape{16, 16, 4.5});
  CHECK_THROWS_AS(model->forward(Tensor({3, 16, 16})), ValidationError);
  CHECK_THROWS_AS(model->forward(Tensor({4, 8, 16})), ValidationError);
}

TEST_CASE("equal seeds give identical parameters and outputs") {
  const Family families[] = {Family::stacked_conv, Family::unet,
                             Family::rec_encdec, Family::reduce_lstm};
  for (Family family : families) {
    ModelSpec spec = small_spec(family, 2, 2, 99);
    auto a = build(spec, GridShape{16, 16, 4.5});
    auto b = build(spec, GridShape{16, 16, 4.5});
    const auto pa = a->params(), pb = b->params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa[i]->name == pb[i]->name);
      CHECK(pa[i]->value == pb[i]->value);
    }
    const Tensor x = random_input(2, 16, 16, 3);
    const Tensor ya = a->forward(x), yb = b->forward(x);
    for (std::size_t i = 0; i < ya.size(); ++i) CHECK(ya[i] == yb[i]);

    spec.seed = 100;
    auto c = build(spec, GridShape{16, 16, 4.5});
    const Tensor yc = c->forward(x);
    bool any_diff = false;
    for (std::size_t i = 0; i < ya.size(); ++i)
      if (ya[i] != yc[i]) any_diff = true;
    INFO(to_string(family));
    CHECK(any_diff);
  }
}

TEST_CASE("finite differences confirm the gradients of every family") {
  SECTION("stacked_conv") {
    ModelSpec spec = small_spec(Family::stacked_conv, 2, 2, 11);
    StackedConvModel model(spec, GridShape{6, 6, 4.5});
    gradient_check(model, 6, 6, 101);
  }
  SECTION("unet") {
    ModelSpec spec = small_spec(Family::unet, 2, 2, 12);
    UNetModel model(spec, GridShape{8, 8, 4.5});
    gradient_check(model, 8, 8, 102);
  }
  SECTION("unet with residual blocks and dense bottleneck") {
    ModelSpec spec = small_spec(Family::unet, 2, 2, 13);
    spec.unet.use_residual = true;
    spec.unet.bottleneck_dense = true;
    spec.unet.activation = Activation::elu;
    UNetModel model(spec, GridShape{8, 8, 4.5});
    gradient_check(model, 8, 8, 103);
  }
  SECTION("rec_encdec") {
    ModelSpec spec = small_spec(Family::rec_encdec, 3, 3, 14);
    RecEncDecModel model(spec, GridShape{6, 6, 4.5});
    gradient_check(model, 6, 6, 104);
  }
  SECTION("reduce_lstm") {
    ModelSpec spec = small_spec(Family::reduce_lstm, 2, 2, 15);
    ReduceLstmModel model(spec, GridShape{8, 8, 4.5});
    gradient_check(model, 8, 8, 105);
  }
}

TEST_CASE("a bias-only 1x1 stacked conv emits the logistic of its bias") {
  ModelSpec spec = small_spec(Family::stacked_conv, 2, 3, 0);
  spec.stacked.kernels = {1};
  StackedConvModel model(spec, GridShape{4, 4, 4.5});
  for (Param* p : model.params()) {
    for (double& v : p->value) v = 0.0;
    if (p->name == "conv0.bias")
      for (std::size_t i = 0; i < p->value.size(); ++i)
        p->value[i] = static_cast<double>(i) - 1.0;  // biases -1, 0, 1
  }
  const Tensor y = model.forward(random_input(2, 4, 4, 8));
  for (int k = 0; k < 3; ++k) {
    const double expected = 1.0 / (1.0 + std::exp(-(k - 1.0)));
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        CHECK_THAT(y(k, r, c), Catch::Matchers::WithinAbs(expected, 1e-12));
  }
}

TEST_CASE("rec_encdec with zero parameters emits a flat 0.5 field") {
  ModelSpec spec = small_spec(Family::rec_encdec, 4, 6, 0);
  RecEncDecModel model(spec, GridShape{8, 8, 4.5});
  for (Param* p : model.params())
    for (double& v : p->value) v = 0.0;
  const Tensor y = model.forward(random_input(4, 8, 8, 9));
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == 0.5);
}

TEST_CASE("rec_encdec output reacts to the last observed frame") {
  ModelSpec spec = small_spec(Family::rec_encdec, 4, 6, 21);
  RecEncDecModel model(spec, GridShape{8, 8, 4.5});
  Tensor x = random_input(4, 8, 8, 10);
  const Tensor y0 = model.forward(x);
  x(3, 4, 4) += 1.0;
  const Tensor y1 = model.forward(x);
  bool horizon1_changed = false;
  for (int p = 0; p < 64; ++p)
    if (y0[static_cast<std::size_t>(p)] != y1[static_cast<std::size_t>(p)])
      horizon1_changed = true;
  CHECK(horizon1_changed);
}

TEST_CASE("reduce_lstm collapses a 64x64 grid through six pooling stages") {
  ModelSpec spec = small_spec(Family::reduce_lstm, 4, 6, 33);
  ReduceLstmModel model(spec, GridShape{64, 64, 4.5});
  CHECK(model.stages() == 6);
  CHECK(model.channel_schedule() ==
        std::vector<int>{8, 16, 32, 64, 128, 256});

  // the LSTM consumes both reduced branches stacked: 2 * 256 = 512 inputs
  bool found = false;
  for (Param* p : model.params())
    if (p->name == "lstm.wx") {
      found = true;
      CHECK(p->shape == std::vector<int>{4 * spec.reduce.lstm_hidden, 512});
    }
  CHECK(found);

  const Tensor y = model.forward(random_input(4, 64, 64, 12));
  CHECK(y.shape() == std::vector<int>{6, 64, 64});
}

TEST_CASE("reduce_lstm rejects non-square and non-power-of-two grids") {
  ModelSpec spec = small_spec(Family::reduce_lstm, 4, 6, 1);
  CHECK_THROWS_AS(ReduceLstmModel(spec, GridShape{32, 64, 4.5}), BuildError);
  CHECK_THROWS_AS(ReduceLstmModel(spec, GridShape{48, 48, 4.5}), BuildError);
}

TEST_CASE("unet rejects grids not divisible by 2^depth") {
  ModelSpec spec = small_spec(Family::unet, 4, 6, 1);
  spec.unet.depth = 3;
  CHECK_THROWS_AS(UNetModel(spec, GridShape{20, 20, 4.5}), BuildError);
}

TEST_CASE("parameter counts match hand-computed formulas") {
  SECTION("stacked_conv") {
    ModelSpec spec = small_spec(Family::stacked_conv, 4, 6, 0);
    spec.stacked.kernels = {5, 3};
    spec.stacked.hidden_channels = 7;
    CHECK(parameter_count(spec, GridShape{16, 16, 4.5}) ==
          conv_params(4, 7, 5) + conv_params(7, 6, 3));
  }

  SECTION("unet") {
    ModelSpec spec = small_spec(Family::unet, 3, 5, 0);
    spec.unet.depth = 2;
    spec.unet.base_channels = 4;
    const std::size_t expected =
        conv_params(3, 4, 3) + conv_params(4, 4, 3) +    // enc0
        conv_params(4, 8, 3) + conv_params(8, 8, 3) +    // enc1
        conv_params(8, 16, 3) + conv_params(16, 16, 3) + // bottleneck
        conv_params(24, 8, 3) + conv_params(8, 8, 3) +   // dec1 (16 up + 8 skip)
        conv_params(12, 4, 3) + conv_params(4, 4, 3) +   // dec0 (8 up + 4 skip)
        conv_params(4, 5, 1);                            // head
    CHECK(parameter_count(spec, GridShape{16, 16, 4.5}) == expected);
  }

  SECTION("rec_encdec") {
    ModelSpec spec = small_spec(Family::rec_encdec, 4, 6, 0);
    spec.rec.hidden_channels = 5;
    spec.rec.state_channels = 7;
    const std::size_t expected =
        conv_params(1, 5, 3) + conv_params(5, 5, 3) +  // encoder
        conv_params(5, 7, 3) + conv_params(7, 7, 3) +  // state in + recurrent
        conv_params(7, 5, 3) + conv_params(5, 1, 3);   // decoder
    CHECK(parameter_count(spec, GridShape{16, 16, 4.5}) == expected);
  }

  SECTION("reduce_lstm") {
    ModelSpec spec = small_spec(Family::reduce_lstm, 2, 2, 0);
    spec.reduce.lstm_hidden = 8;
    // 8x8 grid: 3 stages, schedule 4, 8, then forced to 256
    const std::size_t branch = conv_params(2, 4, 3, 1) +
                               conv_params(4, 8, 3, 1) +
                               conv_params(8, 256, 3, 1);
    const std::size_t lstm = static_cast<std::size_t>(4 * 8) * 512 +
                             static_cast<std::size_t>(4 * 8) * 8 + 4 * 8;
    const std::size_t decoder = static_cast<std::size_t>(2 * 8) * 8 + 2 * 8;
    CHECK(parameter_count(spec, GridShape{8, 8, 4.5}) ==
          2 * branch + lstm + decoder);
  }
}

TEST_CASE("forecast wraps the model output with sequence metadata") {
  const SequenceSpec seq{2, 2, 900};
  SequenceSample sample;
  for (int k = 0; k < 4; ++k) {
    CloudGrid g(GridShape{16, 16, 4.5}, k * 900,
                std::vector<std::uint8_t>(256, k % 2));
    (k < 2 ? sample.inputs : sample.targets).push_back(g);
  }
  ModelSpec spec = small_spec(Family::stacked_conv, 2, 2, 5);
  auto model = build(spec, GridShape{16, 16, 4.5});
  const ForecastVolume volume = forecast(*model, sample);
  CHECK(volume.base_timestamp == 900);
  CHECK(volume.cadence_s == 900);
  CHECK(volume.t_out() == 2);
  CHECK(volume.horizons.shape() == std::vector<int>{2, 16, 16});
}
