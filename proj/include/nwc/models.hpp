#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "nwc/errors.hpp"
#include "nwc/grid.hpp"
#include "nwc/layers.hpp"

namespace nwc {

enum class Family { stacked_conv, unet, rec_encdec, reduce_lstm };

inline Family family_from_string(const std::string& s) {
  if (s == "stacked_conv") return Family::stacked_conv;
  if (s == "unet") return Family::unet;
  if (s == "rec_encdec") return Family::rec_encdec;
  if (s == "reduce_lstm") return Family::reduce_lstm;
  throw ConfigError("unknown model family: " + s);
}

inline std::string to_string(Family f) {
  switch (f) {
    case Family::stacked_conv: return "stacked_conv";
    case Family::unet: return "unet";
    case Family::rec_encdec: return "rec_encdec";
    case Family::reduce_lstm: return "reduce_lstm";
  }
  return "?";
}

struct StackedConvSpec {
  std::vector<int> kernels = {5, 5, 5};  // one entry per layer, odd sizes
  int hidden_channels = 16;
};

struct UNetSpec {
  int depth = 3;
  int base_channels = 8;
  bool use_residual = false;
  Activation activation = Activation::relu;
  bool bottleneck_dense = false;
};

struct RecEncDecSpec {
  int hidden_channels = 16;
  int state_channels = 32;
};

struct ReduceLstmSpec {
  int lstm_hidden = 128;
};

struct ModelSpec {
  Family family = Family::unet;
  int t_in = 4;
  int t_out = 6;
  std::uint64_t seed = 0;
  StackedConvSpec stacked;
  UNetSpec unet;
  RecEncDecSpec rec;
  ReduceLstmSpec reduce;

  void validate() const {
    if (t_in < 1 || t_out < 1)
      throw BuildError("ModelSpec: t_in and t_out must be >= 1");
  }
};

// A model maps a (t_in, H, W) binary stack to a (t_out, H, W) probability
// volume. forward caches activations; one backward call per forward
// accumulates parameter gradients. Inference-only callers may forward freely;
// caches are reset on every forward entry.
class Model {
 public:
  Model(ModelSpec spec, GridShape grid) : spec_(std::move(spec)), grid_(grid) {}
  virtual ~Model() = default;

  virtual Tensor forward(const Tensor& input) = 0;
  virtual void backward(const Tensor& grad_output) = 0;

  const ModelSpec& spec() const { return spec_; }
  const GridShape& grid() const { return grid_; }

  std::vector<Param*> params() {
    std::vector<Param*> out;
    for (Layer* layer : layers_)
      for (Param* p : layer->params()) out.push_back(p);
    return out;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (Param* p : params()) n += p->size();
    return n;
  }

  void zero_grad() {
    for (Param* p : params()) p->zero_grad();
  }

 protected:
  template <typename L, typename... Args>
  L* make(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L* raw = layer.get();
    owned_.push_back(std::move(layer));
    layers_.push_back(raw);
    return raw;
  }

  void clear_caches() {
    for (Layer* layer : layers_) layer->clear_cache();
  }

  void check_input(const Tensor& x) const {
    if (x.rank() != 3 || x.dim(0) != spec_.t_in || x.dim(1) != grid_.height ||
        x.dim(2) != grid_.width)
      throw ValidationError("model input must have shape (t_in, H, W) = (" +
                            std::to_string(spec_.t_in) + "," +
                            std::to_string(grid_.height) + "," +
                            std::to_string(grid_.width) + ")");
  }

  ModelSpec spec_;
  GridShape grid_;

 private:
  std::vector<std::unique_ptr<Layer>> owned_;
  std::vector<Layer*> layers_;
};

namespace detail {

inline Tensor transpose_hw(const Tensor& x) {
  Tensor y({x.dim(0), x.dim(2), x.dim(1)});
  for (int c = 0; c < x.dim(0); ++c)
    for (int r = 0; r < x.dim(1); ++r)
      for (int col = 0; col < x.dim(2); ++col) y(c, col, r) = x(c, r, col);
  return y;
}

}  // namespace detail

// Plain stack of same-padding convolutions; last layer emits t_out channels,
// then a logistic squashing.
class StackedConvModel : public Model {
 public:
  StackedConvModel(ModelSpec spec, GridShape grid)
      : Model(std::move(spec), grid) {
    spec_.validate();
    const StackedConvSpec& sc = spec_.stacked;
    if (sc.kernels.empty())
      throw BuildError("stacked_conv: needs at least one layer");
    const int n = static_cast<int>(sc.kernels.size());
    Rng rng(spec_.seed);
    for (int i = 0; i < n; ++i) {
      const int c_in = i == 0 ? spec_.t_in : sc.hidden_channels;
      const int c_out = i == n - 1 ? spec_.t_out : sc.hidden_channels;
      convs_.push_back(make<Conv2d>("conv" + std::to_string(i), c_in, c_out,
                                    sc.kernels[static_cast<std::size_t>(i)],
                                    sc.kernels[static_cast<std::size_t>(i)], rng));
      acts_.push_back(make<Activate>(i == n - 1 ? Activation::sigmoid
                                                : Activation::relu));
    }
  }

  Tensor forward(const Tensor& input) override {
    check_input(input);
    clear_caches();
    Tensor x = input;
    for (std::size_t i = 0; i < convs_.size(); ++i)
      x = acts_[i]->forward(convs_[i]->forward(x));
    return x;
  }

  void backward(const Tensor& grad_output) override {
    Tensor g = grad_output;
    for (std::size_t i = convs_.size(); i-- > 0;)
      g = convs_[i]->backward(acts_[i]->backward(g));
  }

 private:
  std::vector<Conv2d*> convs_;
  std::vector<Activate*> acts_;
};

// Encoder halves the spatial size per stage doubling channels; the decoder
// mirrors with nearest upsampling and consumes each encoder feature once
// through a skip concatenation.
class UNetModel : public Model {
 public:
  UNetModel(ModelSpec spec, GridShape grid) : Model(std::move(spec), grid) {
    spec_.validate();
    const UNetSpec& u = spec_.unet;
    if (u.depth < 1 || u.base_channels < 1)
      throw BuildError("unet: depth and base_channels must be >= 1");
    const int factor = 1 << u.depth;
    if (grid_.height % factor != 0 || grid_.width % factor != 0)
      throw BuildError("unet: grid " + std::to_string(grid_.height) + "x" +
                       std::to_string(grid_.width) + " not divisible by 2^depth=" +
                       std::to_string(factor));

    Rng rng(spec_.seed);
    int c_prev = spec_.t_in;
    for (int s = 0; s < u.depth; ++s) {
      const int c = u.base_channels << s;
      enc_.push_back(make_block("enc" + std::to_string(s), c_prev, c, rng));
      pool_.push_back(make<MaxPool2d>(2, 2));
      c_prev = c;
    }
    const int c_bot = u.base_channels << u.depth;
    bottleneck_ = make_block("bottleneck", c_prev, c_bot, rng);
    if (u.bottleneck_dense) {
      const int spatial = (grid_.height / factor) * (grid_.width / factor);
      dense_ = make<Linear>("bottleneck_dense", spatial, spatial, rng);
      dense_act_ = make<Activate>(u.activation);
    }
    c_prev = c_bot;
    for (int s = u.depth - 1; s >= 0; --s) {
      const int c_skip = u.base_channels << s;
      up_.push_back(make<UpsampleNearest2d>(2));
      dec_.push_back(make_block("dec" + std::to_string(s), c_prev + c_skip,
                                c_skip, rng));
      c_prev = c_skip;
    }
    head_ = make<Conv2d>("head", u.base_channels, spec_.t_out, 1, 1, rng);
    head_act_ = make<Activate>(Activation::sigmoid);
  }

  Tensor forward(const Tensor& input) override {
    check_input(input);
    clear_caches();
    Tensor x = input;
    std::vector<Tensor> skips;
    for (std::size_t s = 0; s < enc_.size(); ++s) {
      Tensor e = block_forward(enc_[s], x);
      skips.push_back(e);
      x = pool_[s]->forward(e);
    }
    x = block_forward(bottleneck_, x);
    if (dense_) x = dense_forward(x);
    skip_channels_.clear();
    for (std::size_t i = 0; i < up_.size(); ++i) {
      Tensor u = up_[i]->forward(x);
      const Tensor& skip = skips[skips.size() - 1 - i];
      skip_channels_.push_back(u.dim(0));
      x = block_forward(dec_[i], concat_channels(u, skip));
    }
    return head_act_->forward(head_->forward(x));
  }

  void backward(const Tensor& grad_output) override {
    Tensor g = head_->backward(head_act_->backward(grad_output));
    std::vector<Tensor> skip_grads(enc_.size());
    for (std::size_t i = up_.size(); i-- > 0;) {
      Tensor gcat = block_backward(dec_[i], g);
      auto [gu, gskip] = split_channels(gcat, skip_channels_[i]);
      skip_grads[enc_.size() - 1 - i] = std::move(gskip);
      g = up_[i]->backward(gu);
    }
    if (dense_) g = dense_backward(g);
    g = block_backward(bottleneck_, g);
    for (std::size_t s = enc_.size(); s-- > 0;) {
      g = pool_[s]->backward(g);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += skip_grads[s][i];
      g = block_backward(enc_[s], g);
    }
  }

 private:
  struct Block {
    Conv2d* conv1 = nullptr;
    Conv2d* conv2 = nullptr;
    Conv2d* proj = nullptr;  // 1x1, residual path only
    Activate* act1 = nullptr;
    Activate* act2 = nullptr;
  };

  Block make_block(const std::string& name, int c_in, int c_out, Rng& rng) {
    Block b;
    b.conv1 = make<Conv2d>(name + ".conv1", c_in, c_out, 3, 3, rng);
    b.act1 = make<Activate>(spec_.unet.activation);
    b.conv2 = make<Conv2d>(name + ".conv2", c_out, c_out, 3, 3, rng);
    if (spec_.unet.use_residual)
      b.proj = make<Conv2d>(name + ".proj", c_in, c_out, 1, 1, rng);
    b.act2 = make<Activate>(spec_.unet.activation);
    return b;
  }

  Tensor block_forward(Block& b, const Tensor& x) {
    Tensor h = b.conv2->forward(b.act1->forward(b.conv1->forward(x)));
    if (b.proj) {
      Tensor p = b.proj->forward(x);
      for (std::size_t i = 0; i < h.size(); ++i) h[i] += p[i];
    }
    return b.act2->forward(h);
  }

  Tensor block_backward(Block& b, const Tensor& grad) {
    Tensor gh = b.act2->backward(grad);
    Tensor gx = b.conv1->backward(b.act1->backward(b.conv2->backward(gh)));
    if (b.proj) {
      Tensor gp = b.proj->backward(gh);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gp[i];
    }
    return gx;
  }

  // Per-channel dense mixing over bottleneck spatial positions.
  Tensor dense_forward(const Tensor& x) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor flat({h * w, c});
    for (int ci = 0; ci < c; ++ci)
      for (int p = 0; p < h * w; ++p)
        flat(p, ci) = x[static_cast<std::size_t>(ci) * h * w + p];
    Tensor mixed = dense_act_->forward(dense_->forward(flat));
    Tensor y({c, h, w});
    for (int ci = 0; ci < c; ++ci)
      for (int p = 0; p < h * w; ++p)
        y[static_cast<std::size_t>(ci) * h * w + p] = mixed(p, ci);
    return y;
  }

  Tensor dense_backward(const Tensor& grad) {
    const int c = grad.dim(0), h = grad.dim(1), w = grad.dim(2);
    Tensor gflat({h * w, c});
    for (int ci = 0; ci < c; ++ci)
      for (int p = 0; p < h * w; ++p)
        gflat(p, ci) = grad[static_cast<std::size_t>(ci) * h * w + p];
    Tensor gx_flat = dense_->backward(dense_act_->backward(gflat));
    Tensor gx({c, h, w});
    for (int ci = 0; ci < c; ++ci)
      for (int p = 0; p < h * w; ++p)
        gx[static_cast<std::size_t>(ci) * h * w + p] = gx_flat(p, ci);
    return gx;
  }

  std::vector<Block> enc_;
  std::vector<MaxPool2d*> pool_;
  Block bottleneck_;
  Linear* dense_ = nullptr;
  Activate* dense_act_ = nullptr;
  std::vector<UpsampleNearest2d*> up_;
  std::vector<Block> dec_;
  Conv2d* head_ = nullptr;
  Activate* head_act_ = nullptr;
  std::vector<int> skip_channels_;
};

// Closed-loop recurrent encoder-decoder: each decoded probability frame is
// fed back as the next step's input. The state is warmed up by rolling the
// encoder over the first t_in - 1 observed frames; generation step 1 then
// consumes the last observed frame.
class RecEncDecModel : public Model {
 public:
  RecEncDecModel(ModelSpec spec, GridShape grid) : Model(std::move(spec), grid) {
    spec_.validate();
    const RecEncDecSpec& r = spec_.rec;
    if (r.hidden_channels < 1 || r.state_channels < 1)
      throw BuildError("rec_encdec: channel counts must be >= 1");
    Rng rng(spec_.seed);
    enc1_ = make<Conv2d>("enc.conv1", 1, r.hidden_channels, 3, 3, rng);
    enc_act1_ = make<Activate>(Activation::relu);
    enc2_ = make<Conv2d>("enc.conv2", r.hidden_channels, r.hidden_channels, 3, 3, rng);
    enc_act2_ = make<Activate>(Activation::relu);
    state_in_ = make<Conv2d>("state.in", r.hidden_channels, r.state_channels, 3, 3, rng);
    state_rec_ = make<Conv2d>("state.rec", r.state_channels, r.state_channels, 3, 3, rng);
    state_act_ = make<Activate>(Activation::tanh);
    dec1_ = make<Conv2d>("dec.conv1", r.state_channels, r.hidden_channels, 3, 3, rng);
    dec_act1_ = make<Activate>(Activation::relu);
    dec2_ = make<Conv2d>("dec.conv2", r.hidden_channels, 1, 3, 3, rng);
    dec_act2_ = make<Activate>(Activation::sigmoid);
  }

  Tensor forward(const Tensor& input) override {
    check_input(input);
    clear_caches();
    const int h = grid_.height, w = grid_.width;
    Tensor state({spec_.rec.state_channels, h, w});
    for (int t = 0; t < spec_.t_in - 1; ++t)
      state = update_state(encode(frame_of(input, t)), state);

    Tensor output({spec_.t_out, h, w});
    Tensor frame = frame_of(input, spec_.t_in - 1);
    for (int k = 0; k < spec_.t_out; ++k) {
      state = update_state(encode(frame), state);
      Tensor decoded = dec_act2_->forward(
          dec2_->forward(dec_act1_->forward(dec1_->forward(state))));
      std::copy(decoded.data(), decoded.data() + decoded.size(),
                output.data() + static_cast<std::size_t>(k) * h * w);
      frame = std::move(decoded);
    }
    return output;
  }

  void backward(const Tensor& grad_output) override {
    const int h = grid_.height, w = grid_.width;
    Tensor dstate_next({spec_.rec.state_channels, h, w});
    Tensor dframe_next({1, h, w});
    for (int k = spec_.t_out - 1; k >= 0; --k) {
      Tensor dy({1, h, w});
      for (int p = 0; p < h * w; ++p)
        dy[static_cast<std::size_t>(p)] =
            grad_output[static_cast<std::size_t>(k) * h * w + p] +
            (k < spec_.t_out - 1 ? dframe_next[static_cast<std::size_t>(p)] : 0.0);
      Tensor dstate = dec1_->backward(
          dec_act1_->backward(dec2_->backward(dec_act2_->backward(dy))));
      for (std::size_t i = 0; i < dstate.size(); ++i) dstate[i] += dstate_next[i];
      auto [de, dprev] = state_backward(dstate);
      dstate_next = std::move(dprev);
      dframe_next = encode_backward(de);
    }
    // warm-up steps: input frames are observations, their grads are dropped
    for (int t = spec_.t_in - 2; t >= 0; --t) {
      auto [de, dprev] = state_backward(dstate_next);
      dstate_next = std::move(dprev);
      encode_backward(de);
    }
  }

 private:
  static Tensor frame_of(const Tensor& input, int t) {
    const int h = input.dim(1), w = input.dim(2);
    Tensor frame({1, h, w});
    std::copy(input.data() + static_cast<std::size_t>(t) * h * w,
              input.data() + static_cast<std::size_t>(t + 1) * h * w,
              frame.data());
    return frame;
  }

  Tensor encode(const Tensor& frame) {
    return enc_act2_->forward(enc2_->forward(enc_act1_->forward(enc1_->forward(frame))));
  }

  Tensor encode_backward(const Tensor& grad) {
    return enc1_->backward(enc_act1_->backward(enc2_->backward(enc_act2_->backward(grad))));
  }

  Tensor update_state(const Tensor& encoded, const Tensor& state) {
    Tensor z = state_in_->forward(encoded);
    Tensor zr = state_rec_->forward(state);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += zr[i];
    return state_act_->forward(z);
  }

  std::pair<Tensor, Tensor> state_backward(const Tensor& dstate) {
    Tensor dz = state_act_->backward(dstate);
    Tensor de = state_in_->backward(dz);
    Tensor dprev = state_rec_->backward(dz);
    return {std::move(de), std::move(dprev)};
  }

  Conv2d *enc1_, *enc2_, *state_in_, *state_rec_, *dec1_, *dec2_;
  Activate *enc_act1_, *enc_act2_, *state_act_, *dec_act1_, *dec_act2_;
};

// Time as channels; each spatial axis is collapsed to a 1D multi-channel
// signal by (3,1) convolutions and (2,1) max pooling, the two signals are
// stacked and fed to an LSTM over the positional axis.
class ReduceLstmModel : public Model {
 public:
  static constexpr int kReducedChannels = 256;

  ReduceLstmModel(ModelSpec spec, GridShape grid) : Model(std::move(spec), grid) {
    spec_.validate();
    if (grid_.height != grid_.width)
      throw BuildError("reduce_lstm: grid must be square, got " +
                       std::to_string(grid_.height) + "x" +
                       std::to_string(grid_.width));
    stages_ = 0;
    int h = grid_.height;
    while (h > 1 && h % 2 == 0) {
      h /= 2;
      ++stages_;
    }
    if (h != 1)
      throw BuildError("reduce_lstm: grid side must be a power of two, got " +
                       std::to_string(grid_.height));

    Rng rng(spec_.seed);
    const std::vector<int> schedule = channel_schedule();
    build_branch("reduce_a", branch_a_, schedule, rng);
    build_branch("reduce_b", branch_b_, schedule, rng);
    lstm_ = make<Lstm1d>("lstm", 2 * kReducedChannels, spec_.reduce.lstm_hidden, rng);
    decoder_ = make<Linear>("decoder", spec_.reduce.lstm_hidden,
                            spec_.t_out * grid_.height, rng);
    out_act_ = make<Activate>(Activation::sigmoid);
  }

  int stages() const { return stages_; }

  std::vector<int> channel_schedule() const {
    std::vector<int> schedule;
    int c = 2 * spec_.t_in;
    for (int s = 0; s < stages_; ++s) {
      if (c > kReducedChannels) c = kReducedChannels;
      if (s == stages_ - 1) c = kReducedChannels;
      schedule.push_back(c);
      c *= 2;
    }
    return schedule;
  }

  Tensor forward(const Tensor& input) override {
    check_input(input);
    clear_caches();
    const int w = grid_.width;
    Tensor ra = branch_forward(branch_a_, input);                        // (256,1,W)
    Tensor rb = branch_forward(branch_b_, detail::transpose_hw(input));  // (256,1,H)
    Tensor stacked = concat_channels(ra, rb).reshaped({2 * kReducedChannels, w});
    Tensor hidden = lstm_->forward(stacked);            // (hidden, W)
    Tensor decoded = decoder_->forward(hidden);         // (t_out*H, W)
    return out_act_->forward(
        decoded.reshaped({spec_.t_out, grid_.height, grid_.width}));
  }

  void backward(const Tensor& grad_output) override {
    const int w = grid_.width;
    Tensor g = out_act_->backward(grad_output)
                   .reshaped({spec_.t_out * grid_.height, w});
    Tensor ghidden = decoder_->backward(g);
    Tensor gstacked = lstm_->backward(ghidden)
                          .reshaped({2 * kReducedChannels, 1, w});
    auto [ga, gb] = split_channels(gstacked, kReducedChannels);
    branch_backward(branch_a_, ga);
    branch_backward(branch_b_, gb);  // input grads discarded
  }

 private:
  struct Branch {
    std::vector<Conv2d*> convs;
    std::vector<Activate*> acts;
    std::vector<MaxPool2d*> pools;
  };

  void build_branch(const std::string& name, Branch& branch,
                    const std::vector<int>& schedule, Rng& rng) {
    int c_in = spec_.t_in;
    for (int s = 0; s < stages_; ++s) {
      const int c_out = schedule[static_cast<std::size_t>(s)];
      branch.convs.push_back(make<Conv2d>(name + ".conv" + std::to_string(s),
                                          c_in, c_out, 3, 1, rng));
      branch.acts.push_back(make<Activate>(Activation::relu));
      branch.pools.push_back(make<MaxPool2d>(2, 1));
      c_in = c_out;
    }
  }

  Tensor branch_forward(Branch& branch, const Tensor& x) {
    Tensor cur = x;
    for (std::size_t s = 0; s < branch.convs.size(); ++s)
      cur = branch.pools[s]->forward(
          branch.acts[s]->forward(branch.convs[s]->forward(cur)));
    return cur;
  }

  Tensor branch_backward(Branch& branch, const Tensor& grad) {
    Tensor g = grad;
    for (std::size_t s = branch.convs.size(); s-- > 0;)
      g = branch.convs[s]->backward(
          branch.acts[s]->backward(branch.pools[s]->backward(g)));
    return g;
  }

  int stages_ = 0;
  Branch branch_a_, branch_b_;
  Lstm1d* lstm_ = nullptr;
  Linear* decoder_ = nullptr;
  Activate* out_act_ = nullptr;
};

inline std::unique_ptr<Model> build(const ModelSpec& spec, const GridShape& grid) {
  grid.validate();
  switch (spec.family) {
    case Family::stacked_conv:
      return std::make_unique<StackedConvModel>(spec, grid);
    case Family::unet:
      return std::make_unique<UNetModel>(spec, grid);
    case Family::rec_encdec:
      return std::make_unique<RecEncDecModel>(spec, grid);
    case Family::reduce_lstm:
      return std::make_unique<ReduceLstmModel>(spec, grid);
  }
  throw BuildError("build: unknown family");
}

inline std::size_t parameter_count(const ModelSpec& spec, const GridShape& grid) {
  return build(spec, grid)->parameter_count();
}

inline ForecastVolume forecast(Model& model, const SequenceSample& sample) {
  ForecastVolume volume;
  volume.shape = sample.grid_shape();
  volume.base_timestamp = sample.base_timestamp();
  if (sample.inputs.size() >= 2)
    volume.cadence_s = sample.inputs.back().timestamp -
                       sample.inputs[sample.inputs.size() - 2].timestamp;
  volume.horizons = model.forward(input_stack(sample));
  return volume;
}

}  // namespace nwc
