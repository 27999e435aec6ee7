#pragma once

// Trainable mini-ResNet builder and static, countable descriptors of the six
// reference architectures (torchvision layouts).

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ervc/model.hpp"

namespace ervc {

struct MiniResNetConfig {
  std::vector<std::size_t> stage_blocks{1, 1, 1};
  std::size_t base_channels = 8;
  std::size_t input_side = 64;
  std::size_t input_channels = 1;
  std::size_t num_classes = 48;
};

/// Stem: 7x7/2 conv + 3x3/2 max pool when input_side >= 128, else 3x3/1 conv.
/// Basic residual blocks (identity or 1x1 projection shortcut), channel
/// doubling and stride 2 at the start of every stage after the first, global
/// average pool, linear head. Throws BadConfig.
template <typename T>
Model<T> build_mini_resnet(const MiniResNetConfig& config, std::uint64_t seed = 0);

enum class ArchName { DenseNet121, InceptionV3, MobileNetV3, ResNet18, ResNet34, ResNet50 };

inline constexpr ArchName kAllArchitectures[] = {ArchName::DenseNet121, ArchName::InceptionV3,
                                                 ArchName::MobileNetV3, ArchName::ResNet18,
                                                 ArchName::ResNet34,    ArchName::ResNet50};

std::string_view display_name(ArchName name);
/// Accepts display names and enum-style spellings ("RESNET34"). Throws UnknownArchitecture.
ArchName parse_arch_name(std::string_view text);

enum class DescOp {
  Conv2d,
  BatchNorm2d,
  Relu,
  HardSwish,
  HardSigmoid,
  MaxPool2d,
  AvgPool2d,
  GlobalAvgPool,
  Linear,
  Add,
  ChannelScale,  // feature map times a per-channel [C,1,1] gate
  Concat,
  Flatten,
  Dropout,
};

struct DescNode {
  std::string name;
  DescOp op = DescOp::Relu;
  std::vector<int> inputs;  // -1 is the network input
  std::size_t out_channels = 0;  // conv; linear out features
  std::size_t kernel_h = 1, kernel_w = 1;
  std::size_t stride_h = 1, stride_w = 1;
  std::size_t pad_h = 0, pad_w = 0;
  std::size_t groups = 1;
  bool bias = false;
  Shape shape;  // per-sample output shape: [C,H,W] or [features]
  std::size_t parameters = 0;
};

struct ArchDescriptor {
  std::string name;
  std::size_t num_classes = 0;
  std::size_t input_channels = 0;
  std::size_t input_side = 0;
  std::vector<DescNode> nodes;
  int output = -1;
  std::vector<int> auxiliary_outputs;

  /// Re-derives every shape and parameter count; throws ShapeMismatch on inconsistency.
  void validate() const;
};

/// Throws UnknownArchitecture (only via parse_arch_name) or BadConfig.
ArchDescriptor describe_architecture(ArchName name, std::size_t num_classes = 1000,
                                     std::size_t input_channels = 3);

std::size_t count_parameters(const ArchDescriptor& descriptor);
template <typename T>
std::size_t count_parameters(const Model<T>& model) {
  return model.parameter_count();
}

struct ArchCount {
  std::string name;
  std::size_t parameters = 0;
};

/// round(count / inception_count, 2) for every entry. Throws MissingBaseline
/// when no entry is named "Inception V3".
std::vector<double> relative_parameters(const std::vector<ArchCount>& counts);

/// CSV "architecture,parameters,relative" over the six reference architectures.
std::string arch_info_csv(std::size_t num_classes = 1000, std::size_t input_channels = 3);

}  // namespace ervc
