#include "ervc/archzoo.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ervc/error.hpp"

namespace ervc {

// ---------------------------------------------------------------------------
// Trainable mini-ResNet

template <typename T>
Model<T> build_mini_resnet(const MiniResNetConfig& config, std::uint64_t seed) {
  if (config.stage_blocks.empty()) fail(Errc::BadConfig, "stage_blocks must not be empty");
  if (std::find(config.stage_blocks.begin(), config.stage_blocks.end(), 0u) !=
      config.stage_blocks.end())
    fail(Errc::BadConfig, "every stage needs at least one block");
  if (config.base_channels == 0 || config.input_channels == 0 || config.num_classes == 0 ||
      config.input_side == 0)
    fail(Errc::BadConfig, "channels, classes and input side must be >= 1");

  try {
    Model<T> m({config.input_channels, config.input_side, config.input_side});
    int x;
    std::size_t channels = config.base_channels;
    if (config.input_side >= 128) {
      x = m.add("stem.conv", LayerSpec::conv2d(config.input_channels, channels, 7, 2, 3), -1);
      x = m.add("stem.bn", LayerSpec::batchnorm2d(channels), x);
      x = m.add("stem.relu", LayerSpec::relu(), x);
      x = m.add("stem.pool", LayerSpec::maxpool2d(3, 2, 1), x);
    } else {
      x = m.add("stem.conv", LayerSpec::conv2d(config.input_channels, channels, 3, 1, 1), -1);
      x = m.add("stem.bn", LayerSpec::batchnorm2d(channels), x);
      x = m.add("stem.relu", LayerSpec::relu(), x);
    }
    std::size_t in_channels = channels;
    for (std::size_t stage = 0; stage < config.stage_blocks.size(); ++stage) {
      const std::size_t out_channels = config.base_channels << stage;
      for (std::size_t b = 0; b < config.stage_blocks[stage]; ++b) {
        const std::size_t stride = (stage > 0 && b == 0) ? 2 : 1;
        const std::string p = "layer" + std::to_string(stage + 1) + "." + std::to_string(b) + ".";
        const int block_in = x;
        int y = m.add(p + "conv1", LayerSpec::conv2d(in_channels, out_channels, 3, stride, 1), x);
        y = m.add(p + "bn1", LayerSpec::batchnorm2d(out_channels), y);
        y = m.add(p + "relu1", LayerSpec::relu(), y);
        y = m.add(p + "conv2", LayerSpec::conv2d(out_channels, out_channels, 3, 1, 1), y);
        y = m.add(p + "bn2", LayerSpec::batchnorm2d(out_channels), y);
        int shortcut = block_in;
        if (stride != 1 || in_channels != out_channels) {
          shortcut = m.add(p + "shortcut.conv",
                           LayerSpec::conv2d(in_channels, out_channels, 1, stride, 0), block_in);
          shortcut = m.add(p + "shortcut.bn", LayerSpec::batchnorm2d(out_channels), shortcut);
        }
        y = m.add(p + "add", LayerSpec::add(), std::vector<int>{y, shortcut});
        x = m.add(p + "relu2", LayerSpec::relu(), y);
        in_channels = out_channels;
      }
    }
    x = m.add("gap", LayerSpec::global_avg_pool(), x);
    m.add("fc", LayerSpec::linear(in_channels, config.num_classes), x);
    m.init(seed);
    return m;
  } catch (const Error& e) {
    if (e.code() == Errc::ShapeMismatch) fail(Errc::BadConfig, e.what());
    throw;
  }
}

template Model<float> build_mini_resnet<float>(const MiniResNetConfig&, std::uint64_t);
template Model<double> build_mini_resnet<double>(const MiniResNetConfig&, std::uint64_t);

// ---------------------------------------------------------------------------
// Names

std::string_view display_name(ArchName name) {
  switch (name) {
    case ArchName::DenseNet121: return "DenseNet-121";
    case ArchName::InceptionV3: return "Inception V3";
    case ArchName::MobileNetV3: return "MobileNet V3";
    case ArchName::ResNet18: return "ResNet-18";
    case ArchName::ResNet34: return "ResNet-34";
    case ArchName::ResNet50: return "ResNet-50";
  }
  return "?";
}

namespace {

std::string squash(std::string_view text) {
  std::string out;
  for (char c : text)
    if (std::isalnum(static_cast<unsigned char>(c)))
      out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return out;
}

}  // namespace

ArchName parse_arch_name(std::string_view text) {
  const std::string key = squash(text);
  for (ArchName a : kAllArchitectures)
    if (squash(display_name(a)) == key) return a;
  fail(Errc::UnknownArchitecture, "'" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Descriptor graphs

namespace {

std::size_t window_extent(std::size_t in, std::size_t k, std::size_t s, std::size_t p,
                          const std::string& where) {
  if (in + 2 * p < k) fail(Errc::ShapeMismatch, where + ": window larger than input");
  return (in + 2 * p - k) / s + 1;
}

const Shape& input_shape(const ArchDescriptor& d, int index, const Shape& net_input) {
  return index < 0 ? net_input : d.nodes[static_cast<std::size_t>(index)].shape;
}

// Computes shape and parameter count of `node` from its (already inferred) inputs.
void infer(const ArchDescriptor& d, DescNode& node) {
  const Shape net_input{d.input_channels, d.input_side, d.input_side};
  std::vector<Shape> in;
  for (int i : node.inputs) {
    if (i >= static_cast<int>(d.nodes.size()) || i < -1)
      fail(Errc::ShapeMismatch, node.name + ": dangling input");
    in.push_back(input_shape(d, i, net_input));
  }
  auto need_inputs = [&](std::size_t n) {
    if (in.size() != n) fail(Errc::ShapeMismatch, node.name + ": wrong input count");
  };
  auto need_map = [&](const Shape& s) {
    if (s.size() != 3) fail(Errc::ShapeMismatch, node.name + ": expects a feature map");
  };
  node.parameters = 0;
  switch (node.op) {
    case DescOp::Conv2d: {
      need_inputs(1);
      need_map(in[0]);
      const std::size_t cin = in[0][0];
      if (node.groups == 0 || cin % node.groups || node.out_channels % node.groups)
        fail(Errc::ShapeMismatch, node.name + ": groups must divide channels");
      node.shape = {node.out_channels,
                    window_extent(in[0][1], node.kernel_h, node.stride_h, node.pad_h, node.name),
                    window_extent(in[0][2], node.kernel_w, node.stride_w, node.pad_w, node.name)};
      node.parameters = node.kernel_h * node.kernel_w * (cin / node.groups) * node.out_channels +
                        (node.bias ? node.out_channels : 0);
      break;
    }
    case DescOp::BatchNorm2d:
      need_inputs(1);
      need_map(in[0]);
      node.shape = in[0];
      node.parameters = 2 * in[0][0];
      break;
    case DescOp::Relu:
    case DescOp::HardSwish:
    case DescOp::HardSigmoid:
    case DescOp::Dropout:
      need_inputs(1);
      node.shape = in[0];
      break;
    case DescOp::MaxPool2d:
    case DescOp::AvgPool2d:
      need_inputs(1);
      need_map(in[0]);
      node.shape = {in[0][0],
                    window_extent(in[0][1], node.kernel_h, node.stride_h, node.pad_h, node.name),
                    window_extent(in[0][2], node.kernel_w, node.stride_w, node.pad_w, node.name)};
      break;
    case DescOp::GlobalAvgPool:
      need_inputs(1);
      need_map(in[0]);
      node.shape = {in[0][0], 1, 1};
      break;
    case DescOp::Flatten:
      need_inputs(1);
      node.shape = {shape_size(in[0])};
      break;
    case DescOp::Linear:
      need_inputs(1);
      if (in[0].size() != 1) fail(Errc::ShapeMismatch, node.name + ": linear expects a vector");
      node.shape = {node.out_channels};
      node.parameters = in[0][0] * node.out_channels + node.out_channels;
      break;
    case DescOp::Add:
      need_inputs(2);
      if (in[0] != in[1])
        fail(Errc::ShapeMismatch, node.name + ": add of " + shape_string(in[0]) + " and " +
                                      shape_string(in[1]));
      node.shape = in[0];
      break;
    case DescOp::ChannelScale:
      need_inputs(2);
      need_map(in[0]);
      if (in[1] != Shape{in[0][0], 1, 1})
        fail(Errc::ShapeMismatch, node.name + ": gate must be [C,1,1]");
      node.shape = in[0];
      break;
    case DescOp::Concat: {
      if (in.empty()) fail(Errc::ShapeMismatch, node.name + ": nothing to concatenate");
      std::size_t channels = 0;
      for (const auto& s : in) {
        need_map(s);
        if (s[1] != in[0][1] || s[2] != in[0][2])
          fail(Errc::ShapeMismatch, node.name + ": concat spatial mismatch");
        channels += s[0];
      }
      node.shape = {channels, in[0][1], in[0][2]};
      break;
    }
  }
}

class GraphBuilder {
public:
  explicit GraphBuilder(ArchDescriptor& d) : d_(d) {}

  int conv(int in, std::size_t out, std::size_t kh, std::size_t kw, std::size_t sh,
           std::size_t sw, std::size_t ph, std::size_t pw, const std::string& name,
           std::size_t groups = 1, bool bias = false) {
    DescNode n;
    n.op = DescOp::Conv2d;
    n.out_channels = out;
    n.kernel_h = kh;
    n.kernel_w = kw;
    n.stride_h = sh;
    n.stride_w = sw;
    n.pad_h = ph;
    n.pad_w = pw;
    n.groups = groups;
    n.bias = bias;
    return push(std::move(n), name, {in});
  }
  int conv(int in, std::size_t out, std::size_t k, std::size_t s, std::size_t p,
           const std::string& name, std::size_t groups = 1, bool bias = false) {
    return conv(in, out, k, k, s, s, p, p, name, groups, bias);
  }
  int bn(int in, const std::string& name) { return simple(DescOp::BatchNorm2d, in, name); }
  int relu(int in, const std::string& name) { return simple(DescOp::Relu, in, name); }
  int hardswish(int in, const std::string& name) { return simple(DescOp::HardSwish, in, name); }
  int hardsigmoid(int in, const std::string& name) { return simple(DescOp::HardSigmoid, in, name); }
  int dropout(int in, const std::string& name) { return simple(DescOp::Dropout, in, name); }
  int gap(int in, const std::string& name) { return simple(DescOp::GlobalAvgPool, in, name); }
  int flatten(int in, const std::string& name) { return simple(DescOp::Flatten, in, name); }
  int maxpool(int in, std::size_t k, std::size_t s, std::size_t p, const std::string& name) {
    return pool(DescOp::MaxPool2d, in, k, s, p, name);
  }
  int avgpool(int in, std::size_t k, std::size_t s, std::size_t p, const std::string& name) {
    return pool(DescOp::AvgPool2d, in, k, s, p, name);
  }
  int linear(int in, std::size_t out, const std::string& name) {
    DescNode n;
    n.op = DescOp::Linear;
    n.out_channels = out;
    n.bias = true;
    return push(std::move(n), name, {in});
  }
  int add(int a, int b, const std::string& name) {
    DescNode n;
    n.op = DescOp::Add;
    return push(std::move(n), name, {a, b});
  }
  int scale(int x, int gate, const std::string& name) {
    DescNode n;
    n.op = DescOp::ChannelScale;
    return push(std::move(n), name, {x, gate});
  }
  int concat(std::vector<int> ins, const std::string& name) {
    DescNode n;
    n.op = DescOp::Concat;
    return push(std::move(n), name, std::move(ins));
  }

  std::size_t channels(int node) const {
    return node < 0 ? d_.input_channels : d_.nodes[static_cast<std::size_t>(node)].shape[0];
  }

  // conv (no bias) + batch norm + activation
  int conv_bn_act(int in, std::size_t out, std::size_t kh, std::size_t kw, std::size_t sh,
                  std::size_t sw, std::size_t ph, std::size_t pw, const std::string& name,
                  DescOp act = DescOp::Relu, std::size_t groups = 1) {
    int x = conv(in, out, kh, kw, sh, sw, ph, pw, name + ".conv", groups);
    x = bn(x, name + ".bn");
    return act == DescOp::Relu ? relu(x, name + ".relu") : simple(act, x, name + ".act");
  }
  int conv_bn_act(int in, std::size_t out, std::size_t k, std::size_t s, std::size_t p,
                  const std::string& name, DescOp act = DescOp::Relu, std::size_t groups = 1) {
    return conv_bn_act(in, out, k, k, s, s, p, p, name, act, groups);
  }

private:
  int simple(DescOp op, int in, const std::string& name) {
    DescNode n;
    n.op = op;
    return push(std::move(n), name, {in});
  }
  int pool(DescOp op, int in, std::size_t k, std::size_t s, std::size_t p, const std::string& name) {
    DescNode n;
    n.op = op;
    n.kernel_h = n.kernel_w = k;
    n.stride_h = n.stride_w = s;
    n.pad_h = n.pad_w = p;
    return push(std::move(n), name, {in});
  }
  int push(DescNode n, const std::string& name, std::vector<int> inputs) {
    n.name = name;
    n.inputs = std::move(inputs);
    infer(d_, n);
    d_.nodes.push_back(std::move(n));
    return static_cast<int>(d_.nodes.size()) - 1;
  }

  ArchDescriptor& d_;
};

// torchvision ResNet (basic or bottleneck blocks)
void build_resnet(GraphBuilder& g, ArchDescriptor& d, const std::vector<std::size_t>& blocks,
                  bool bottleneck) {
  int x = g.conv(-1, 64, 7, 2, 3, "conv1");
  x = g.bn(x, "bn1");
  x = g.relu(x, "relu");
  x = g.maxpool(x, 3, 2, 1, "maxpool");
  const std::size_t expansion = bottleneck ? 4 : 1;
  std::size_t in = 64;
  for (std::size_t stage = 0; stage < blocks.size(); ++stage) {
    const std::size_t width = std::size_t{64} << stage;
    for (std::size_t b = 0; b < blocks[stage]; ++b) {
      const std::size_t stride = (stage > 0 && b == 0) ? 2 : 1;
      const std::string p = "layer" + std::to_string(stage + 1) + "." + std::to_string(b) + ".";
      int y;
      if (bottleneck) {
        y = g.conv(x, width, 1, 1, 0, p + "conv1");
        y = g.relu(g.bn(y, p + "bn1"), p + "relu1");
        y = g.conv(y, width, 3, stride, 1, p + "conv2");
        y = g.relu(g.bn(y, p + "bn2"), p + "relu2");
        y = g.conv(y, width * expansion, 1, 1, 0, p + "conv3");
        y = g.bn(y, p + "bn3");
      } else {
        y = g.conv(x, width, 3, stride, 1, p + "conv1");
        y = g.relu(g.bn(y, p + "bn1"), p + "relu1");
        y = g.conv(y, width, 3, 1, 1, p + "conv2");
        y = g.bn(y, p + "bn2");
      }
      int shortcut = x;
      if (stride != 1 || in != width * expansion) {
        shortcut = g.conv(x, width * expansion, 1, stride, 0, p + "downsample.0");
        shortcut = g.bn(shortcut, p + "downsample.1");
      }
      x = g.relu(g.add(y, shortcut, p + "add"), p + "relu");
      in = width * expansion;
    }
  }
  x = g.flatten(g.gap(x, "avgpool"), "flatten");
  d.output = g.linear(x, d.num_classes, "fc");
}

void build_densenet121(GraphBuilder& g, ArchDescriptor& d) {
  constexpr std::size_t kGrowth = 32, kBottleneck = 4;
  const std::size_t block_layers[] = {6, 12, 24, 16};
  int x = g.conv(-1, 64, 7, 2, 3, "features.conv0");
  x = g.relu(g.bn(x, "features.norm0"), "features.relu0");
  x = g.maxpool(x, 3, 2, 1, "features.pool0");
  for (std::size_t blk = 0; blk < 4; ++blk) {
    const std::string bp = "features.denseblock" + std::to_string(blk + 1) + ".";
    for (std::size_t l = 0; l < block_layers[blk]; ++l) {
      const std::string p = bp + "denselayer" + std::to_string(l + 1) + ".";
      int y = g.relu(g.bn(x, p + "norm1"), p + "relu1");
      y = g.conv(y, kBottleneck * kGrowth, 1, 1, 0, p + "conv1");
      y = g.relu(g.bn(y, p + "norm2"), p + "relu2");
      y = g.conv(y, kGrowth, 3, 1, 1, p + "conv2");
      x = g.concat({x, y}, p + "concat");
    }
    if (blk != 3) {
      const std::string tp = "features.transition" + std::to_string(blk + 1) + ".";
      int y = g.relu(g.bn(x, tp + "norm"), tp + "relu");
      y = g.conv(y, g.channels(y) / 2, 1, 1, 0, tp + "conv");
      x = g.avgpool(y, 2, 2, 0, tp + "pool");
    }
  }
  x = g.relu(g.bn(x, "features.norm5"), "relu");
  x = g.flatten(g.gap(x, "avgpool"), "flatten");
  d.output = g.linear(x, d.num_classes, "classifier");
}

// Inception V3 with the auxiliary classifier; BasicConv2d = conv + BN + ReLU.
void build_inception_v3(GraphBuilder& g, ArchDescriptor& d) {
  auto bc = [&g](int in, std::size_t out, std::size_t kh, std::size_t kw, std::size_t s,
                 std::size_t ph, std::size_t pw, const std::string& name) {
    return g.conv_bn_act(in, out, kh, kw, s, s, ph, pw, name);
  };
  auto bcs = [&bc](int in, std::size_t out, std::size_t k, std::size_t s, std::size_t p,
                   const std::string& name) { return bc(in, out, k, k, s, p, p, name); };

  auto inception_a = [&](int x, std::size_t pool_features, const std::string& n) {
    const int b1 = bcs(x, 64, 1, 1, 0, n + ".branch1x1");
    int b5 = bcs(x, 48, 1, 1, 0, n + ".branch5x5_1");
    b5 = bcs(b5, 64, 5, 1, 2, n + ".branch5x5_2");
    int b3 = bcs(x, 64, 1, 1, 0, n + ".branch3x3dbl_1");
    b3 = bcs(b3, 96, 3, 1, 1, n + ".branch3x3dbl_2");
    b3 = bcs(b3, 96, 3, 1, 1, n + ".branch3x3dbl_3");
    int bp = g.avgpool(x, 3, 1, 1, n + ".pool");
    bp = bcs(bp, pool_features, 1, 1, 0, n + ".branch_pool");
    return g.concat({b1, b5, b3, bp}, n + ".concat");
  };
  auto inception_b = [&](int x, const std::string& n) {
    const int b3 = bcs(x, 384, 3, 2, 0, n + ".branch3x3");
    int bd = bcs(x, 64, 1, 1, 0, n + ".branch3x3dbl_1");
    bd = bcs(bd, 96, 3, 1, 1, n + ".branch3x3dbl_2");
    bd = bcs(bd, 96, 3, 2, 0, n + ".branch3x3dbl_3");
    const int bp = g.maxpool(x, 3, 2, 0, n + ".pool");
    return g.concat({b3, bd, bp}, n + ".concat");
  };
  auto inception_c = [&](int x, std::size_t c7, const std::string& n) {
    const int b1 = bcs(x, 192, 1, 1, 0, n + ".branch1x1");
    int b7 = bcs(x, c7, 1, 1, 0, n + ".branch7x7_1");
    b7 = bc(b7, c7, 1, 7, 1, 0, 3, n + ".branch7x7_2");
    b7 = bc(b7, 192, 7, 1, 1, 3, 0, n + ".branch7x7_3");
    int bd = bcs(x, c7, 1, 1, 0, n + ".branch7x7dbl_1");
    bd = bc(bd, c7, 7, 1, 1, 3, 0, n + ".branch7x7dbl_2");
    bd = bc(bd, c7, 1, 7, 1, 0, 3, n + ".branch7x7dbl_3");
    bd = bc(bd, c7, 7, 1, 1, 3, 0, n + ".branch7x7dbl_4");
    bd = bc(bd, 192, 1, 7, 1, 0, 3, n + ".branch7x7dbl_5");
    int bp = g.avgpool(x, 3, 1, 1, n + ".pool");
    bp = bcs(bp, 192, 1, 1, 0, n + ".branch_pool");
    return g.concat({b1, b7, bd, bp}, n + ".concat");
  };
  auto inception_d = [&](int x, const std::string& n) {
    int b3 = bcs(x, 192, 1, 1, 0, n + ".branch3x3_1");
    b3 = bcs(b3, 320, 3, 2, 0, n + ".branch3x3_2");
    int b7 = bcs(x, 192, 1, 1, 0, n + ".branch7x7x3_1");
    b7 = bc(b7, 192, 1, 7, 1, 0, 3, n + ".branch7x7x3_2");
    b7 = bc(b7, 192, 7, 1, 1, 3, 0, n + ".branch7x7x3_3");
    b7 = bcs(b7, 192, 3, 2, 0, n + ".branch7x7x3_4");
    const int bp = g.maxpool(x, 3, 2, 0, n + ".pool");
    return g.concat({b3, b7, bp}, n + ".concat");
  };
  auto inception_e = [&](int x, const std::string& n) {
    const int b1 = bcs(x, 320, 1, 1, 0, n + ".branch1x1");
    const int b3 = bcs(x, 384, 1, 1, 0, n + ".branch3x3_1");
    const int b3a = bc(b3, 384, 1, 3, 1, 0, 1, n + ".branch3x3_2a");
    const int b3b = bc(b3, 384, 3, 1, 1, 1, 0, n + ".branch3x3_2b");
    const int b3cat = g.concat({b3a, b3b}, n + ".branch3x3");
    int bd = bcs(x, 448, 1, 1, 0, n + ".branch3x3dbl_1");
    bd = bcs(bd, 384, 3, 1, 1, n + ".branch3x3dbl_2");
    const int bda = bc(bd, 384, 1, 3, 1, 0, 1, n + ".branch3x3dbl_3a");
    const int bdb = bc(bd, 384, 3, 1, 1, 1, 0, n + ".branch3x3dbl_3b");
    const int bdcat = g.concat({bda, bdb}, n + ".branch3x3dbl");
    int bp = g.avgpool(x, 3, 1, 1, n + ".pool");
    bp = bcs(bp, 192, 1, 1, 0, n + ".branch_pool");
    return g.concat({b1, b3cat, bdcat, bp}, n + ".concat");
  };

  int x = bcs(-1, 32, 3, 2, 0, "Conv2d_1a_3x3");
  x = bcs(x, 32, 3, 1, 0, "Conv2d_2a_3x3");
  x = bcs(x, 64, 3, 1, 1, "Conv2d_2b_3x3");
  x = g.maxpool(x, 3, 2, 0, "maxpool1");
  x = bcs(x, 80, 1, 1, 0, "Conv2d_3b_1x1");
  x = bcs(x, 192, 3, 1, 0, "Conv2d_4a_3x3");
  x = g.maxpool(x, 3, 2, 0, "maxpool2");
  x = inception_a(x, 32, "Mixed_5b");
  x = inception_a(x, 64, "Mixed_5c");
  x = inception_a(x, 64, "Mixed_5d");
  x = inception_b(x, "Mixed_6a");
  x = inception_c(x, 128, "Mixed_6b");
  x = inception_c(x, 160, "Mixed_6c");
  x = inception_c(x, 160, "Mixed_6d");
  x = inception_c(x, 192, "Mixed_6e");

  int aux = g.avgpool(x, 5, 3, 0, "AuxLogits.pool");
  aux = bcs(aux, 128, 1, 1, 0, "AuxLogits.conv0");
  aux = bcs(aux, 768, 5, 1, 0, "AuxLogits.conv1");
  aux = g.flatten(g.gap(aux, "AuxLogits.avgpool"), "AuxLogits.flatten");
  d.auxiliary_outputs.push_back(g.linear(aux, d.num_classes, "AuxLogits.fc"));

  x = inception_d(x, "Mixed_7a");
  x = inception_e(x, "Mixed_7b");
  x = inception_e(x, "Mixed_7c");
  x = g.flatten(g.gap(x, "avgpool"), "flatten");
  x = g.dropout(x, "dropout");
  d.output = g.linear(x, d.num_classes, "fc");
}

std::size_t make_divisible(double v, std::size_t divisor = 8) {
  std::size_t out = std::max<std::size_t>(
      divisor, static_cast<std::size_t>(v + static_cast<double>(divisor) / 2.0) / divisor * divisor);
  if (static_cast<double>(out) < 0.9 * v) out += divisor;
  return out;
}

// MobileNet V3 Large.
void build_mobilenet_v3_large(GraphBuilder& g, ArchDescriptor& d) {
  struct Block {
    std::size_t in, kernel, expanded, out;
    bool se;
    bool hardswish;
    std::size_t stride;
  };
  const Block blocks[] = {
      {16, 3, 16, 16, false, false, 1},   {16, 3, 64, 24, false, false, 2},
      {24, 3, 72, 24, false, false, 1},   {24, 5, 72, 40, true, false, 2},
      {40, 5, 120, 40, true, false, 1},   {40, 5, 120, 40, true, false, 1},
      {40, 3, 240, 80, false, true, 2},   {80, 3, 200, 80, false, true, 1},
      {80, 3, 184, 80, false, true, 1},   {80, 3, 184, 80, false, true, 1},
      {80, 3, 480, 112, true, true, 1},   {112, 3, 672, 112, true, true, 1},
      {112, 5, 672, 160, true, true, 2},  {160, 5, 960, 160, true, true, 1},
      {160, 5, 960, 160, true, true, 1},
  };
  int x = g.conv_bn_act(-1, 16, 3, 2, 1, "features.0", DescOp::HardSwish);
  for (std::size_t i = 0; i < std::size(blocks); ++i) {
    const Block& b = blocks[i];
    const std::string p = "features." + std::to_string(i + 1) + ".";
    const DescOp act = b.hardswish ? DescOp::HardSwish : DescOp::Relu;
    int y = x;
    if (b.expanded != b.in) y = g.conv_bn_act(y, b.expanded, 1, 1, 0, p + "expand", act);
    y = g.conv_bn_act(y, b.expanded, b.kernel, b.stride, (b.kernel - 1) / 2, p + "depthwise", act,
                      b.expanded);
    if (b.se) {
      const std::size_t squeeze = make_divisible(static_cast<double>(b.expanded / 4));
      int s = g.gap(y, p + "se.avgpool");
      s = g.conv(s, squeeze, 1, 1, 0, p + "se.fc1", 1, true);
      s = g.relu(s, p + "se.relu");
      s = g.conv(s, b.expanded, 1, 1, 0, p + "se.fc2", 1, true);
      s = g.hardsigmoid(s, p + "se.hardsigmoid");
      y = g.scale(y, s, p + "se.scale");
    }
    y = g.conv(y, b.out, 1, 1, 0, p + "project.conv");
    y = g.bn(y, p + "project.bn");
    if (b.stride == 1 && b.in == b.out) y = g.add(y, x, p + "add");
    x = y;
  }
  x = g.conv_bn_act(x, 960, 1, 1, 0, "features.16", DescOp::HardSwish);
  x = g.flatten(g.gap(x, "avgpool"), "flatten");
  x = g.linear(x, 1280, "classifier.0");
  x = g.hardswish(x, "classifier.1");
  x = g.dropout(x, "classifier.2");
  d.output = g.linear(x, d.num_classes, "classifier.3");
}

}  // namespace

void ArchDescriptor::validate() const {
  ArchDescriptor replay = *this;
  replay.nodes.clear();
  for (const auto& node : nodes) {
    DescNode copy = node;
    for (int i : copy.inputs)
      if (i >= static_cast<int>(replay.nodes.size()))
        fail(Errc::ShapeMismatch, node.name + ": input is not an earlier node");
    infer(replay, copy);
    if (copy.shape != node.shape || copy.parameters != node.parameters)
      fail(Errc::ShapeMismatch, node.name + ": stored annotation is inconsistent");
    replay.nodes.push_back(std::move(copy));
  }
  if (!nodes.empty()) {
    if (output < 0 || output >= static_cast<int>(nodes.size()))
      fail(Errc::ShapeMismatch, name + ": no output node");
    if (nodes[static_cast<std::size_t>(output)].shape != Shape{num_classes})
      fail(Errc::ShapeMismatch, name + ": output is not a class vector");
  }
}

ArchDescriptor describe_architecture(ArchName name, std::size_t num_classes,
                                     std::size_t input_channels) {
  if (num_classes == 0 || input_channels == 0)
    fail(Errc::BadConfig, "classes and input channels must be >= 1");
  ArchDescriptor d;
  d.name = std::string(display_name(name));
  d.num_classes = num_classes;
  d.input_channels = input_channels;
  d.input_side = name == ArchName::InceptionV3 ? 299 : 224;
  GraphBuilder g(d);
  switch (name) {
    case ArchName::DenseNet121: build_densenet121(g, d); break;
    case ArchName::InceptionV3: build_inception_v3(g, d); break;
    case ArchName::MobileNetV3: build_mobilenet_v3_large(g, d); break;
    case ArchName::ResNet18: build_resnet(g, d, {2, 2, 2, 2}, false); break;
    case ArchName::ResNet34: build_resnet(g, d, {3, 4, 6, 3}, false); break;
    case ArchName::ResNet50: build_resnet(g, d, {3, 4, 6, 3}, true); break;
  }
  return d;
}

std::size_t count_parameters(const ArchDescriptor& descriptor) {
  std::size_t total = 0;
  for (const auto& n : descriptor.nodes) total += n.parameters;
  return total;
}

std::vector<double> relative_parameters(const std::vector<ArchCount>& counts) {
  const auto baseline = std::find_if(counts.begin(), counts.end(), [](const ArchCount& c) {
    return c.name == display_name(ArchName::InceptionV3);
  });
  if (baseline == counts.end() || baseline->parameters == 0)
    fail(Errc::MissingBaseline, "Inception V3 count required as denominator");
  std::vector<double> out;
  for (const auto& c : counts)
    out.push_back(std::round(100.0 * static_cast<double>(c.parameters) /
                             static_cast<double>(baseline->parameters)) /
                  100.0);
  return out;
}

std::string arch_info_csv(std::size_t num_classes, std::size_t input_channels) {
  std::vector<ArchCount> counts;
  for (ArchName a : kAllArchitectures)
    counts.push_back({std::string(display_name(a)),
                      count_parameters(describe_architecture(a, num_classes, input_channels))});
  const auto ratios = relative_parameters(counts);
  std::ostringstream out;
  out << "architecture,parameters,relative\n";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    char ratio[32];
    std::snprintf(ratio, sizeof ratio, "%.2f", ratios[i]);
    out << counts[i].name << ',' << counts[i].parameters << ',' << ratio << '\n';
  }
  return out.str();
}

}  // namespace ervc
