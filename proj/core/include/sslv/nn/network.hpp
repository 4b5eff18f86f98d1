#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "sslv/nn/layers.hpp"
#include "sslv/rng.hpp"

namespace sslv::nn {

enum class ArchId : uint8_t { C3D = 0, R3D18 = 1 };

const char* to_string(ArchId arch);

// Width/resolution knob. channel_div divides every channel width of the
// reference tables; at channel_div=1, t=16, crop=224, fc_width=4096 the
// networks match the reference architectures exactly.
struct Scale {
  int channel_div = 1;
  int t = 16;
  int crop = 224;
  int fc_width = 4096;

  static Scale full() { return {}; }
  static Scale desk() { return {8, 8, 32, 512}; }
  void validate() const;
};

struct BatchNormSpec {
  int channels = 1;
  real eps = real(1e-5);
  real momentum = real(0.1);
};

struct ReluSpec {};

struct LinearSpec {
  int in_dim = 1;
  int out_dim = 1;
};

struct SpatialAvgPoolSpec {};
struct FlattenSpec {};

// Basic residual block: conv1(+bn,relu) -> conv2(+bn), added to the identity
// or to a 1x1x1 projection (+bn) of the input, then relu.
struct ResidualSpec {
  Conv3dSpec conv1;
  BatchNormSpec bn1;
  Conv3dSpec conv2;
  BatchNormSpec bn2;
  bool projection = false;
  Conv3dSpec proj;
  BatchNormSpec proj_bn;
};

using LayerSpec = std::variant<Conv3dSpec, MaxPool3dSpec, BatchNormSpec, ReluSpec, LinearSpec,
                               SpatialAvgPoolSpec, FlattenSpec, ResidualSpec>;

struct NamedLayer {
  std::string path;
  LayerSpec spec;
};

// Per-item shape (no batch axis): (T,H,W,C) for volumes, (D) after flatten.
using ItemShape = std::vector<int>;

struct TraceRow {
  std::string name;
  ItemShape shape;
};

struct NetworkPlan {
  ArchId arch = ArchId::C3D;
  Scale scale;
  int num_outputs = 1;
  std::vector<NamedLayer> layers;
  ItemShape input_shape;            // (t, crop, crop, 3)
  std::vector<TraceRow> shape_trace;  // input row plus one row per layer

  const ItemShape& output_shape() const { return shape_trace.back().shape; }
};

// Builds the layer sequence and runs shape inference without allocating any
// parameters; build_network adds initialized parameters on top.
NetworkPlan plan_network(ArchId arch, const Scale& scale, int num_outputs);

ItemShape infer_output_shape(const LayerSpec& spec, const ItemShape& in);

// Number of trainable parameters implied by the specs alone.
size_t plan_parameter_count(const NetworkPlan& plan);

// Named tensors: trainable weights plus non-trainable buffers (batch-norm
// running statistics), each trainable tensor paired with a zero-initialized
// momentum buffer.
struct ParameterSet {
  std::map<std::string, Tensor> trainable;
  std::map<std::string, Tensor> buffers;
  std::map<std::string, Tensor> momentum;

  size_t parameter_count() const;
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
};

using GradMap = std::map<std::string, Tensor>;

enum class Mode { Train, Eval };

// Opaque per-layer activations captured by a train-mode forward pass.
struct LayerTrace {
  Tensor input;
  std::vector<int64_t> argmax;
  BatchNormCache bn;
  std::vector<int> input_shape;
  std::vector<LayerTrace> inner;  // residual sub-layers
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  int batch = 0;
};

class Network {
 public:
  Network(NetworkPlan plan, Rng& rng);  // He-initialized weights

  static Network from_plan_uninitialized(NetworkPlan plan);  // zeros; for loading

  const NetworkPlan& plan() const { return plan_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  int num_outputs() const { return plan_.num_outputs; }

  // Batch (B,t,crop,crop,3) -> logits (B,num_outputs). Train mode fills
  // the trace and updates batch-norm running statistics.
  Tensor forward(const Tensor& batch, Mode mode, ForwardTrace* trace = nullptr);

  // Requires a trace captured by a train-mode forward on this network.
  GradMap backward(const ForwardTrace& trace, const Tensor& grad_logits) const;

  // Name of the final classification layer (replaced on transfer).
  std::string head_path() const;

 private:
  Network() = default;

  NetworkPlan plan_;
  ParameterSet params_;
};

Network build_network(ArchId arch, const Scale& scale, int num_outputs, Rng& rng);

// v <- momentum * v + g; theta <- theta - lr * v, per trainable tensor.
void sgd_step(ParameterSet& params, const GradMap& grads, real lr, real momentum);

}  // namespace sslv::nn
