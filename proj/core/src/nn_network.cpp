#include "sslv/nn/network.hpp"

#include <algorithm>
#include <cmath>

namespace sslv::nn {

const char* to_string(ArchId arch) {
  switch (arch) {
    case ArchId::C3D: return "c3d";
    case ArchId::R3D18: return "r3d18";
  }
  return "unknown";
}

void Scale::validate() const {
  if (channel_div < 1 || 64 % channel_div != 0)
    fail(ErrorKind::InvalidParameter, "scale.channel_div must divide 64");
  if (t < 2) fail(ErrorKind::InvalidParameter, "scale.t must be at least 2");
  if (crop < 4) fail(ErrorKind::InvalidParameter, "scale.crop must be at least 4");
  if (fc_width < 1) fail(ErrorKind::InvalidParameter, "scale.fc_width must be positive");
}

namespace {

int pool_out(int in, int pad, int k, int stride) { return (in + 2 * pad - k) / stride + 1; }

struct PlanBuilder {
  NetworkPlan plan;
  ItemShape cur;

  void push(const std::string& path, LayerSpec spec) {
    cur = infer_output_shape(spec, cur);
    plan.layers.push_back({path, std::move(spec)});
    plan.shape_trace.push_back({path, cur});
  }

  void conv_block(const std::string& path, int k, int out_ch, std::array<int, 3> stride) {
    Conv3dSpec conv;
    conv.kt = conv.kh = conv.kw = k;
    conv.in_ch = cur[3];
    conv.out_ch = out_ch;
    conv.st = stride[0];
    conv.sh = stride[1];
    conv.sw = stride[2];
    conv.pt = conv.ph = conv.pw = (k - 1) / 2;
    push(path, conv);
    push(path + ".bn", BatchNormSpec{out_ch});
    push(path + ".relu", ReluSpec{});
  }

  // Pool with window clamped to the incoming extent so shallow inputs
  // degrade to a no-op along that axis instead of failing.
  void pool(const std::string& path, std::array<int, 3> window, std::array<int, 3> stride,
            std::array<int, 3> pad = {0, 0, 0}) {
    MaxPool3dSpec p;
    p.wt = std::min(window[0], cur[0] + 2 * pad[0]);
    p.wh = std::min(window[1], cur[1] + 2 * pad[1]);
    p.ww = std::min(window[2], cur[2] + 2 * pad[2]);
    p.st = stride[0];
    p.sh = stride[1];
    p.sw = stride[2];
    p.pt = pad[0];
    p.ph = pad[1];
    p.pw = pad[2];
    push(path, p);
  }

  void residual(const std::string& path, int out_ch, int stride) {
    ResidualSpec block;
    const int in_ch = cur[3];
    block.conv1 = Conv3dSpec{3, 3, 3, in_ch, out_ch, stride, stride, stride, 1, 1, 1};
    block.bn1 = BatchNormSpec{out_ch};
    block.conv2 = Conv3dSpec{3, 3, 3, out_ch, out_ch, 1, 1, 1, 1, 1, 1};
    block.bn2 = BatchNormSpec{out_ch};
    block.projection = stride != 1 || in_ch != out_ch;
    if (block.projection) {
      block.proj = Conv3dSpec{1, 1, 1, in_ch, out_ch, stride, stride, stride, 0, 0, 0};
      block.proj_bn = BatchNormSpec{out_ch};
    }
    push(path, block);
  }

  void linear(const std::string& path, int out_dim, bool with_relu) {
    push(path, LinearSpec{cur[0], out_dim});
    if (with_relu) push(path + ".relu", ReluSpec{});
  }
};

}  // namespace

ItemShape infer_output_shape(const LayerSpec& spec, const ItemShape& in) {
  if (std::holds_alternative<Conv3dSpec>(spec)) {
    const auto& s = std::get<Conv3dSpec>(spec);
    s.validate();
    if (in.size() != 4 || in[3] != s.in_ch)
      fail(ErrorKind::ShapeMismatch, "conv3d input channels do not match spec");
    return {pool_out(in[0], s.pt, s.kt, s.st), pool_out(in[1], s.ph, s.kh, s.sh),
            pool_out(in[2], s.pw, s.kw, s.sw), s.out_ch};
  }
  if (std::holds_alternative<MaxPool3dSpec>(spec)) {
    const auto& s = std::get<MaxPool3dSpec>(spec);
    s.validate();
    if (in.size() != 4) fail(ErrorKind::ShapeMismatch, "maxpool3d expects a (T,H,W,C) input");
    if (s.wt > in[0] + 2 * s.pt || s.wh > in[1] + 2 * s.ph || s.ww > in[2] + 2 * s.pw)
      fail(ErrorKind::InvalidShape, "pool window larger than padded input");
    return {pool_out(in[0], s.pt, s.wt, s.st), pool_out(in[1], s.ph, s.wh, s.sh),
            pool_out(in[2], s.pw, s.ww, s.sw), in[3]};
  }
  if (std::holds_alternative<BatchNormSpec>(spec)) {
    const auto& s = std::get<BatchNormSpec>(spec);
    if (in.size() != 4 || in[3] != s.channels)
      fail(ErrorKind::ShapeMismatch, "batchnorm channels do not match input");
    return in;
  }
  if (std::holds_alternative<ReluSpec>(spec)) return in;
  if (std::holds_alternative<LinearSpec>(spec)) {
    const auto& s = std::get<LinearSpec>(spec);
    if (in.size() != 1 || in[0] != s.in_dim)
      fail(ErrorKind::ShapeMismatch, "linear input dim does not match spec");
    return {s.out_dim};
  }
  if (std::holds_alternative<SpatialAvgPoolSpec>(spec)) {
    if (in.size() != 4) fail(ErrorKind::ShapeMismatch, "spatial_avg_pool expects (T,H,W,C)");
    return {in[0], 1, 1, in[3]};
  }
  if (std::holds_alternative<FlattenSpec>(spec)) {
    int prod = 1;
    for (int d : in) prod *= d;
    return {prod};
  }
  const auto& s = std::get<ResidualSpec>(spec);
  ItemShape a = infer_output_shape(s.conv1, in);
  ItemShape b = infer_output_shape(s.conv2, a);
  ItemShape sc = s.projection ? infer_output_shape(s.proj, in) : in;
  if (b != sc) fail(ErrorKind::ShapeMismatch, "residual branch and shortcut shapes differ");
  return b;
}

NetworkPlan plan_network(ArchId arch, const Scale& scale, int num_outputs) {
  scale.validate();
  if (num_outputs < 1) fail(ErrorKind::InvalidParameter, "num_outputs must be at least 1");
  const int d = scale.channel_div;

  PlanBuilder pb;
  pb.plan.arch = arch;
  pb.plan.scale = scale;
  pb.plan.num_outputs = num_outputs;
  pb.cur = {scale.t, scale.crop, scale.crop, 3};
  pb.plan.input_shape = pb.cur;
  pb.plan.shape_trace.push_back({"input", pb.cur});

  if (arch == ArchId::C3D) {
    pb.conv_block("conv1", 7, 64 / d, {1, 1, 1});
    pb.pool("pool1", {1, 2, 2}, {1, 2, 2});
    pb.conv_block("conv2", 3, 128 / d, {1, 1, 1});
    pb.pool("pool2", {2, 2, 2}, {2, 2, 2});
    pb.conv_block("conv3a", 3, 256 / d, {1, 1, 1});
    pb.conv_block("conv3b", 3, 256 / d, {1, 1, 1});
    pb.pool("pool3", {2, 2, 2}, {2, 2, 2});
    pb.conv_block("conv4a", 3, 512 / d, {1, 1, 1});
    pb.conv_block("conv4b", 3, 512 / d, {1, 1, 1});
    pb.pool("pool4", {2, 2, 2}, {2, 2, 2});
    pb.conv_block("conv5a", 3, 512 / d, {1, 1, 1});
    pb.conv_block("conv5b", 3, 512 / d, {1, 1, 1});
    pb.pool("pool5", {2, 2, 2}, {2, 2, 2});
    pb.push("flatten", FlattenSpec{});
    pb.linear("fc1", scale.fc_width, true);
    pb.linear("fc2", scale.fc_width, true);
    pb.linear("fc3", num_outputs, false);
  } else {
    // Stem: 7x7x7 stride 1x2x2, then 3x3x3 max pool stride 1x2x2.
    Conv3dSpec stem{7, 7, 7, 3, 64 / d, 1, 2, 2, 3, 3, 3};
    pb.push("conv1", stem);
    pb.push("conv1.bn", BatchNormSpec{64 / d});
    pb.push("conv1.relu", ReluSpec{});
    pb.pool("pool", {3, 3, 3}, {1, 2, 2}, {1, 1, 1});
    pb.residual("block2a", 64 / d, 1);
    pb.residual("block2b", 64 / d, 1);
    pb.residual("block3a", 128 / d, 2);
    pb.residual("block3b", 128 / d, 1);
    pb.residual("block4a", 256 / d, 2);
    pb.residual("block4b", 256 / d, 1);
    pb.residual("block5a", 512 / d, 2);
    pb.residual("block5b", 512 / d, 1);
    pb.push("avgpool", SpatialAvgPoolSpec{});
    pb.push("flatten", FlattenSpec{});
    pb.linear("fc", num_outputs, false);
  }
  return std::move(pb.plan);
}

namespace {

size_t conv_param_count(const Conv3dSpec& s) {
  return static_cast<size_t>(s.kt) * s.kh * s.kw * s.in_ch * s.out_ch +
         static_cast<size_t>(s.out_ch);
}

size_t spec_param_count(const LayerSpec& spec) {
  if (std::holds_alternative<Conv3dSpec>(spec)) return conv_param_count(std::get<Conv3dSpec>(spec));
  if (std::holds_alternative<BatchNormSpec>(spec))
    return 2 * static_cast<size_t>(std::get<BatchNormSpec>(spec).channels);
  if (std::holds_alternative<LinearSpec>(spec)) {
    const auto& s = std::get<LinearSpec>(spec);
    return static_cast<size_t>(s.in_dim) * s.out_dim + static_cast<size_t>(s.out_dim);
  }
  if (std::holds_alternative<ResidualSpec>(spec)) {
    const auto& s = std::get<ResidualSpec>(spec);
    size_t n = conv_param_count(s.conv1) + 2 * static_cast<size_t>(s.bn1.channels) +
               conv_param_count(s.conv2) + 2 * static_cast<size_t>(s.bn2.channels);
    if (s.projection)
      n += conv_param_count(s.proj) + 2 * static_cast<size_t>(s.proj_bn.channels);
    return n;
  }
  return 0;
}

}  // namespace

size_t plan_parameter_count(const NetworkPlan& plan) {
  size_t n = 0;
  for (const NamedLayer& layer : plan.layers) n += spec_param_count(layer.spec);
  return n;
}

size_t ParameterSet::parameter_count() const {
  size_t n = 0;
  for (const auto& [name, t] : trainable) n += t.size();
  return n;
}

Tensor& ParameterSet::at(const std::string& name) {
  auto it = trainable.find(name);
  if (it != trainable.end()) return it->second;
  auto bt = buffers.find(name);
  if (bt != buffers.end()) return bt->second;
  fail(ErrorKind::StateError, "unknown parameter " + name);
}

const Tensor& ParameterSet::at(const std::string& name) const {
  return const_cast<ParameterSet*>(this)->at(name);
}

namespace {

void register_conv(ParameterSet& ps, const std::string& path, const Conv3dSpec& s) {
  ps.trainable[path + ".w"] = Tensor::zeros(s.weight_shape());
  ps.trainable[path + ".b"] = Tensor::zeros({s.out_ch});
}

void register_bn(ParameterSet& ps, const std::string& path, const BatchNormSpec& s) {
  ps.trainable[path + ".gamma"] = Tensor::full({s.channels}, real(1));
  ps.trainable[path + ".beta"] = Tensor::zeros({s.channels});
  ps.buffers[path + ".running_mean"] = Tensor::zeros({s.channels});
  ps.buffers[path + ".running_var"] = Tensor::full({s.channels}, real(1));
}

void register_linear(ParameterSet& ps, const std::string& path, const LinearSpec& s) {
  ps.trainable[path + ".w"] = Tensor::zeros({s.in_dim, s.out_dim});
  ps.trainable[path + ".b"] = Tensor::zeros({s.out_dim});
}

void register_layer(ParameterSet& ps, const NamedLayer& layer) {
  if (std::holds_alternative<Conv3dSpec>(layer.spec)) {
    register_conv(ps, layer.path, std::get<Conv3dSpec>(layer.spec));
  } else if (std::holds_alternative<BatchNormSpec>(layer.spec)) {
    register_bn(ps, layer.path, std::get<BatchNormSpec>(layer.spec));
  } else if (std::holds_alternative<LinearSpec>(layer.spec)) {
    register_linear(ps, layer.path, std::get<LinearSpec>(layer.spec));
  } else if (std::holds_alternative<ResidualSpec>(layer.spec)) {
    const auto& s = std::get<ResidualSpec>(layer.spec);
    register_conv(ps, layer.path + ".conv1", s.conv1);
    register_bn(ps, layer.path + ".bn1", s.bn1);
    register_conv(ps, layer.path + ".conv2", s.conv2);
    register_bn(ps, layer.path + ".bn2", s.bn2);
    if (s.projection) {
      register_conv(ps, layer.path + ".proj", s.proj);
      register_bn(ps, layer.path + ".proj_bn", s.proj_bn);
    }
  }
}

void he_fill(Tensor& w, size_t fan_in, Rng& rng) {
  const real std_dev = static_cast<real>(std::sqrt(2.0 / static_cast<double>(fan_in)));
  for (size_t i = 0; i < w.size(); ++i)
    w[i] = static_cast<real>(rng.next_gaussian(0.0, static_cast<double>(std_dev)));
}

void init_conv(ParameterSet& ps, const std::string& path, const Conv3dSpec& s, Rng& rng) {
  he_fill(ps.trainable[path + ".w"],
          static_cast<size_t>(s.kt) * s.kh * s.kw * s.in_ch, rng);
}

void init_layer(ParameterSet& ps, const NamedLayer& layer, Rng& rng) {
  if (std::holds_alternative<Conv3dSpec>(layer.spec)) {
    init_conv(ps, layer.path, std::get<Conv3dSpec>(layer.spec), rng);
  } else if (std::holds_alternative<LinearSpec>(layer.spec)) {
    const auto& s = std::get<LinearSpec>(layer.spec);
    he_fill(ps.trainable[layer.path + ".w"], static_cast<size_t>(s.in_dim), rng);
  } else if (std::holds_alternative<ResidualSpec>(layer.spec)) {
    const auto& s = std::get<ResidualSpec>(layer.spec);
    init_conv(ps, layer.path + ".conv1", s.conv1, rng);
    init_conv(ps, layer.path + ".conv2", s.conv2, rng);
    if (s.projection) init_conv(ps, layer.path + ".proj", s.proj, rng);
  }
}

}  // namespace

Network::Network(NetworkPlan plan, Rng& rng) : plan_(std::move(plan)) {
  for (const NamedLayer& layer : plan_.layers) register_layer(params_, layer);
  for (const NamedLayer& layer : plan_.layers) init_layer(params_, layer, rng);
  for (const auto& [name, t] : params_.trainable)
    params_.momentum[name] = Tensor::zeros(t.shape());
}

Network Network::from_plan_uninitialized(NetworkPlan plan) {
  Network net;
  net.plan_ = std::move(plan);
  for (const NamedLayer& layer : net.plan_.layers) register_layer(net.params_, layer);
  for (const auto& [name, t] : net.params_.trainable)
    net.params_.momentum[name] = Tensor::zeros(t.shape());
  return net;
}

std::string Network::head_path() const {
  for (auto it = plan_.layers.rbegin(); it != plan_.layers.rend(); ++it)
    if (std::holds_alternative<LinearSpec>(it->spec)) return it->path;
  fail(ErrorKind::StateError, "network has no linear head");
}

Network build_network(ArchId arch, const Scale& scale, int num_outputs, Rng& rng) {
  return Network(plan_network(arch, scale, num_outputs), rng);
}

namespace {

Tensor residual_forward(const ResidualSpec& s, const std::string& path, ParameterSet& ps,
                        const Tensor& x, Mode mode, LayerTrace* tr) {
  auto bn_fwd = [&](const std::string& bn_path, const BatchNormSpec& bn, const Tensor& in,
                    LayerTrace* sub) {
    if (mode == Mode::Train)
      return batchnorm_forward_train(in, ps.at(bn_path + ".gamma"), ps.at(bn_path + ".beta"),
                                     bn.eps, bn.momentum, &ps.at(bn_path + ".running_mean"),
                                     &ps.at(bn_path + ".running_var"), &sub->bn);
    return batchnorm_forward_eval(in, ps.at(bn_path + ".gamma"), ps.at(bn_path + ".beta"),
                                  ps.at(bn_path + ".running_mean"),
                                  ps.at(bn_path + ".running_var"), bn.eps);
  };

  LayerTrace scratch;
  LayerTrace& t = tr ? *tr : scratch;
  t.inner.resize(8);

  if (mode == Mode::Train) t.inner[0].input = x;
  Tensor a = conv3d_forward_batch(x, s.conv1, ps.at(path + ".conv1.w"), ps.at(path + ".conv1.b"));
  Tensor b = bn_fwd(path + ".bn1", s.bn1, a, &t.inner[1]);
  if (mode == Mode::Train) t.inner[2].input = b;
  Tensor c = relu_forward(b);
  if (mode == Mode::Train) t.inner[3].input = c;
  Tensor d = conv3d_forward_batch(c, s.conv2, ps.at(path + ".conv2.w"), ps.at(path + ".conv2.b"));
  Tensor e = bn_fwd(path + ".bn2", s.bn2, d, &t.inner[4]);

  Tensor shortcut;
  if (s.projection) {
    if (mode == Mode::Train) t.inner[5].input = x;
    Tensor p =
        conv3d_forward_batch(x, s.proj, ps.at(path + ".proj.w"), ps.at(path + ".proj.b"));
    shortcut = bn_fwd(path + ".proj_bn", s.proj_bn, p, &t.inner[6]);
  } else {
    shortcut = x;
  }

  Tensor summed = add(e, shortcut);
  if (mode == Mode::Train) t.inner[7].input = summed;
  return relu_forward(summed);
}

Tensor residual_backward(const ResidualSpec& s, const std::string& path, const ParameterSet& ps,
                         const LayerTrace& t, const Tensor& grad_out, GradMap& grads) {
  Tensor dsum = relu_backward(grad_out, t.inner[7].input);

  Tensor dg, db;
  Tensor de = batchnorm_backward(dsum, t.inner[4].bn, ps.at(path + ".bn2.gamma"), &dg, &db);
  grads[path + ".bn2.gamma"] = std::move(dg);
  grads[path + ".bn2.beta"] = std::move(db);
  Tensor gw, gb;
  Tensor dc = conv3d_backward_batch(de, t.inner[3].input, s.conv2, ps.at(path + ".conv2.w"),
                                    &gw, &gb);
  grads[path + ".conv2.w"] = std::move(gw);
  grads[path + ".conv2.b"] = std::move(gb);
  Tensor dbn1 = relu_backward(dc, t.inner[2].input);
  Tensor da = batchnorm_backward(dbn1, t.inner[1].bn, ps.at(path + ".bn1.gamma"), &dg, &db);
  grads[path + ".bn1.gamma"] = std::move(dg);
  grads[path + ".bn1.beta"] = std::move(db);
  Tensor dx = conv3d_backward_batch(da, t.inner[0].input, s.conv1, ps.at(path + ".conv1.w"),
                                    &gw, &gb);
  grads[path + ".conv1.w"] = std::move(gw);
  grads[path + ".conv1.b"] = std::move(gb);

  Tensor dshort;
  if (s.projection) {
    Tensor dp = batchnorm_backward(dsum, t.inner[6].bn, ps.at(path + ".proj_bn.gamma"), &dg, &db);
    grads[path + ".proj_bn.gamma"] = std::move(dg);
    grads[path + ".proj_bn.beta"] = std::move(db);
    dshort = conv3d_backward_batch(dp, t.inner[5].input, s.proj, ps.at(path + ".proj.w"),
                                   &gw, &gb);
    grads[path + ".proj.w"] = std::move(gw);
    grads[path + ".proj.b"] = std::move(gb);
  } else {
    dshort = dsum;
  }
  return add(dx, dshort);
}

}  // namespace

Tensor Network::forward(const Tensor& batch, Mode mode, ForwardTrace* trace) {
  if (batch.rank() != 5) fail(ErrorKind::ShapeMismatch, "network input must be (B,T,H,W,C)");
  for (int axis = 0; axis < 4; ++axis)
    if (batch.dim(axis + 1) != plan_.input_shape[static_cast<size_t>(axis)])
      fail(ErrorKind::ShapeMismatch, "network input does not match the planned input shape");

  ForwardTrace scratch;
  ForwardTrace& tr = trace ? *trace : scratch;
  if (mode == Mode::Train) {
    tr.layers.assign(plan_.layers.size(), LayerTrace{});
    tr.batch = batch.dim(0);
  }

  Tensor x = batch;
  for (size_t i = 0; i < plan_.layers.size(); ++i) {
    const NamedLayer& layer = plan_.layers[i];
    LayerTrace* t = mode == Mode::Train ? &tr.layers[i] : nullptr;
    if (std::holds_alternative<Conv3dSpec>(layer.spec)) {
      if (t) t->input = x;
      x = conv3d_forward_batch(x, std::get<Conv3dSpec>(layer.spec),
                               params_.at(layer.path + ".w"), params_.at(layer.path + ".b"));
    } else if (std::holds_alternative<MaxPool3dSpec>(layer.spec)) {
      std::vector<int64_t> argmax;
      Tensor out = maxpool3d_forward_batch(x, std::get<MaxPool3dSpec>(layer.spec), &argmax);
      if (t) {
        t->argmax = std::move(argmax);
        t->input_shape = x.shape();
      }
      x = std::move(out);
    } else if (std::holds_alternative<BatchNormSpec>(layer.spec)) {
      const auto& s = std::get<BatchNormSpec>(layer.spec);
      if (mode == Mode::Train) {
        x = batchnorm_forward_train(x, params_.at(layer.path + ".gamma"),
                                    params_.at(layer.path + ".beta"), s.eps, s.momentum,
                                    &params_.at(layer.path + ".running_mean"),
                                    &params_.at(layer.path + ".running_var"), &t->bn);
      } else {
        x = batchnorm_forward_eval(x, params_.at(layer.path + ".gamma"),
                                   params_.at(layer.path + ".beta"),
                                   params_.at(layer.path + ".running_mean"),
                                   params_.at(layer.path + ".running_var"), s.eps);
      }
    } else if (std::holds_alternative<ReluSpec>(layer.spec)) {
      if (t) t->input = x;
      x = relu_forward(x);
    } else if (std::holds_alternative<LinearSpec>(layer.spec)) {
      if (t) t->input = x;
      x = linear_forward(x, params_.at(layer.path + ".w"), params_.at(layer.path + ".b"));
    } else if (std::holds_alternative<SpatialAvgPoolSpec>(layer.spec)) {
      if (t) t->input_shape = x.shape();
      x = spatial_avg_pool_forward(x);
    } else if (std::holds_alternative<FlattenSpec>(layer.spec)) {
      if (t) t->input_shape = x.shape();
      x = flatten_forward(x);
    } else {
      x = residual_forward(std::get<ResidualSpec>(layer.spec), layer.path, params_, x, mode, t);
    }
  }
  return x;
}

GradMap Network::backward(const ForwardTrace& trace, const Tensor& grad_logits) const {
  if (trace.layers.size() != plan_.layers.size())
    fail(ErrorKind::StateError, "backward requires the trace of a train-mode forward");

  GradMap grads;
  Tensor g = grad_logits;
  for (size_t ri = plan_.layers.size(); ri-- > 0;) {
    const NamedLayer& layer = plan_.layers[ri];
    const LayerTrace& t = trace.layers[ri];
    if (std::holds_alternative<Conv3dSpec>(layer.spec)) {
      Tensor gw, gb;
      g = conv3d_backward_batch(g, t.input, std::get<Conv3dSpec>(layer.spec),
                                params_.at(layer.path + ".w"), &gw, &gb);
      grads[layer.path + ".w"] = std::move(gw);
      grads[layer.path + ".b"] = std::move(gb);
    } else if (std::holds_alternative<MaxPool3dSpec>(layer.spec)) {
      g = maxpool3d_backward_batch(g, t.argmax, t.input_shape);
    } else if (std::holds_alternative<BatchNormSpec>(layer.spec)) {
      Tensor dg, db;
      g = batchnorm_backward(g, t.bn, params_.at(layer.path + ".gamma"), &dg, &db);
      grads[layer.path + ".gamma"] = std::move(dg);
      grads[layer.path + ".beta"] = std::move(db);
    } else if (std::holds_alternative<ReluSpec>(layer.spec)) {
      g = relu_backward(g, t.input);
    } else if (std::holds_alternative<LinearSpec>(layer.spec)) {
      Tensor gw, gb;
      g = linear_backward(g, t.input, params_.at(layer.path + ".w"), &gw, &gb);
      grads[layer.path + ".w"] = std::move(gw);
      grads[layer.path + ".b"] = std::move(gb);
    } else if (std::holds_alternative<SpatialAvgPoolSpec>(layer.spec)) {
      g = spatial_avg_pool_backward(g, t.input_shape);
    } else if (std::holds_alternative<FlattenSpec>(layer.spec)) {
      g = flatten_backward(g, t.input_shape);
    } else {
      g = residual_backward(std::get<ResidualSpec>(layer.spec), layer.path, params_, t, g, grads);
    }
  }
  return grads;
}

void sgd_step(ParameterSet& params, const GradMap& grads, real lr, real momentum) {
  if (!(lr > 0)) fail(ErrorKind::InvalidParameter, "learning rate must be positive");
  if (!(momentum >= 0 && momentum < 1))
    fail(ErrorKind::InvalidParameter, "momentum must lie in [0, 1)");
  for (auto& [name, theta] : params.trainable) {
    auto it = grads.find(name);
    if (it == grads.end()) fail(ErrorKind::ShapeMismatch, "missing gradient for " + name);
    const Tensor& g = it->second;
    if (!g.same_shape(theta))
      fail(ErrorKind::ShapeMismatch, "gradient shape mismatch for " + name);
    Tensor& v = params.momentum[name];
    real* vp = v.data();
    real* tp = theta.data();
    const real* gp = g.data();
    for (size_t i = 0; i < theta.size(); ++i) {
      vp[i] = momentum * vp[i] + gp[i];
      tp[i] -= lr * vp[i];
    }
  }
}

}  // namespace sslv::nn
