#include "ervc/error.hpp"

namespace ervc {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::UnknownPair: return "UnknownPair";
    case Errc::CountMismatch: return "CountMismatch";
    case Errc::Unbalanced: return "Unbalanced";
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedTransferSyntax: return "UnsupportedTransferSyntax";
    case Errc::TruncatedElement: return "TruncatedElement";
    case Errc::OutOfOrderTag: return "OutOfOrderTag";
    case Errc::MissingRequiredTag: return "MissingRequiredTag";
    case Errc::UnsupportedModality: return "UnsupportedModality";
    case Errc::NoViewText: return "NoViewText";
    case Errc::PixelLengthMismatch: return "PixelLengthMismatch";
    case Errc::UnsupportedPhotometric: return "UnsupportedPhotometric";
    case Errc::NotSquare: return "NotSquare";
    case Errc::RegionOutOfBounds: return "RegionOutOfBounds";
    case Errc::BadHeader: return "BadHeader";
    case Errc::TruncatedPixels: return "TruncatedPixels";
    case Errc::BadInputShape: return "BadInputShape";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::BadTargetIndex: return "BadTargetIndex";
    case Errc::BadConfig: return "BadConfig";
    case Errc::UnknownArchitecture: return "UnknownArchitecture";
    case Errc::MissingBaseline: return "MissingBaseline";
    case Errc::BadCheckpoint: return "BadCheckpoint";
    case Errc::IncompatibleHead: return "IncompatibleHead";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::Empty: return "Empty";
    case Errc::EmptyMatrix: return "EmptyMatrix";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::DegenerateLabels: return "DegenerateLabels";
    case Errc::NegativeStatistic: return "NegativeStatistic";
    case Errc::ZeroMarginal: return "ZeroMarginal";
    case Errc::Io: return "Io";
    case Errc::BadCsv: return "BadCsv";
  }
  return "Unknown";
}

}  // namespace ervc
