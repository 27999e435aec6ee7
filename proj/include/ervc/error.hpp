#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ervc {

/// Typed failure codes shared by every module.
enum class Errc {
  // taxonomy / dataset
  UnknownLabel,
  UnknownPair,
  CountMismatch,
  Unbalanced,
  // dicom
  BadMagic,
  UnsupportedTransferSyntax,
  TruncatedElement,
  OutOfOrderTag,
  MissingRequiredTag,
  UnsupportedModality,
  NoViewText,
  PixelLengthMismatch,
  UnsupportedPhotometric,
  // imaging
  NotSquare,
  RegionOutOfBounds,
  BadHeader,
  TruncatedPixels,
  BadInputShape,
  // engine / archzoo
  ShapeMismatch,
  BadTargetIndex,
  BadConfig,
  UnknownArchitecture,
  MissingBaseline,
  BadCheckpoint,
  IncompatibleHead,
  // trainer
  EmptyDataset,
  NonFiniteLoss,
  // metrics / stats
  Empty,
  EmptyMatrix,
  IndexOutOfRange,
  DegenerateLabels,
  NegativeStatistic,
  ZeroMarginal,
  // io
  Io,
  BadCsv,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace ervc
