#pragma once

// Minimal DICOM Part-10 reader: Explicit VR Little Endian, uncompressed,
// single-frame 16-bit monochrome. Sequences are skipped, never interpreted.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ervc/image.hpp"

namespace ervc::dicom {

struct Tag {
  std::uint16_t group = 0;
  std::uint16_t element = 0;

  auto operator<=>(const Tag&) const = default;
};

inline constexpr Tag kTransferSyntaxUid{0x0002, 0x0010};
inline constexpr Tag kModality{0x0008, 0x0060};
inline constexpr Tag kSeriesDescription{0x0008, 0x103E};
inline constexpr Tag kBodyPartExamined{0x0018, 0x0015};
inline constexpr Tag kImageLaterality{0x0020, 0x0062};
inline constexpr Tag kPhotometricInterpretation{0x0028, 0x0004};
inline constexpr Tag kRows{0x0028, 0x0010};
inline constexpr Tag kColumns{0x0028, 0x0011};
inline constexpr Tag kBitsAllocated{0x0028, 0x0100};
inline constexpr Tag kBitsStored{0x0028, 0x0101};
inline constexpr Tag kPixelData{0x7FE0, 0x0010};

inline constexpr std::string_view kExplicitVrLittleEndian = "1.2.840.10008.1.2.1";

struct Element {
  std::string vr;
  std::vector<std::uint8_t> value;
};

struct PixelDescriptor {
  std::uint16_t rows = 0;
  std::uint16_t columns = 0;
  std::uint16_t bits_allocated = 0;
  std::uint16_t bits_stored = 0;
  std::string photometric;
};

struct DicomObject {
  std::string transfer_syntax;
  std::map<Tag, Element> elements;  // dataset only; file meta is not retained
  PixelDescriptor pixels;

  const Element* find(Tag tag) const;
  /// Text value with DICOM padding (trailing spaces / NUL) removed.
  std::optional<std::string> text(Tag tag) const;
};

enum class Photometric { Monochrome1, Monochrome2 };

struct RadiographMeta {
  std::string modality;
  std::string raw_view;
  std::optional<std::string> laterality;
  Photometric photometric = Photometric::Monochrome2;
};

/// Throws BadMagic, UnsupportedTransferSyntax, TruncatedElement, OutOfOrderTag,
/// MissingRequiredTag.
DicomObject parse_dicom(std::span<const std::uint8_t> bytes);
DicomObject load_dicom(const std::filesystem::path& path);

/// View text is SeriesDescription when present, else BodyPartExamined.
/// Throws UnsupportedModality, NoViewText, UnsupportedPhotometric.
RadiographMeta extract_meta(const DicomObject& obj);

/// MONOCHROME1 data is inverted (v' = 2^bits_stored - 1 - v) so that 0 is darkest.
/// Throws PixelLengthMismatch, UnsupportedPhotometric.
Image16 extract_pixels(const DicomObject& obj);

}  // namespace ervc::dicom
