#include "ervc/dicom.hpp"

#include <algorithm>
#include <cstdio>

#include "ervc/error.hpp"
#include "ervc/io.hpp"

namespace ervc::dicom {
namespace {

constexpr std::size_t kPreambleSize = 128;
constexpr std::uint32_t kUndefinedLength = 0xFFFFFFFF;
constexpr Tag kItem{0xFFFE, 0xE000};
constexpr Tag kItemDelimitation{0xFFFE, 0xE00D};
constexpr Tag kSequenceDelimitation{0xFFFE, 0xE0DD};

std::string tag_string(Tag tag) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "(%04X,%04X)", tag.group, tag.element);
  return buf;
}

bool has_long_length(std::string_view vr) {
  static constexpr std::string_view kLong[] = {"OB", "OD", "OF", "OL", "OV", "OW", "SQ",
                                               "SV", "UC", "UN", "UR", "UT", "UV"};
  return std::find(std::begin(kLong), std::end(kLong), vr) != std::end(kLong);
}

std::string trim_value(std::span<const std::uint8_t> raw) {
  std::string s(raw.begin(), raw.end());
  while (!s.empty() && (s.back() == ' ' || s.back() == '\0')) s.pop_back();
  const auto first = s.find_first_not_of(' ');
  return first == std::string::npos ? std::string{} : s.substr(first);
}

// Cursor over an explicit VR little endian stream.
class Reader {
public:
  explicit Reader(std::span<const std::uint8_t> bytes, std::size_t pos)
      : bytes_(bytes), pos_(pos) {}

  bool at_end() const { return pos_ >= bytes_.size(); }
  std::size_t pos() const { return pos_; }

  void need(std::size_t n, Tag tag) const {
    if (bytes_.size() - pos_ < n) fail(Errc::TruncatedElement, tag_string(tag));
  }

  Tag peek_tag() const {
    need(4, Tag{});
    return {get_u16le(bytes_, pos_), get_u16le(bytes_, pos_ + 2)};
  }

  struct Header {
    Tag tag;
    std::string vr;
    std::uint32_t length = 0;
  };

  // Item and delimitation markers carry no VR.
  Header read_marker() {
    need(8, Tag{});
    Header h;
    h.tag = peek_tag();
    h.length = get_u32le(bytes_, pos_ + 4);
    pos_ += 8;
    return h;
  }

  Header read_header() {
    Header h;
    h.tag = peek_tag();
    need(8, h.tag);
    h.vr.assign(reinterpret_cast<const char*>(bytes_.data()) + pos_ + 4, 2);
    if (!std::isupper(static_cast<unsigned char>(h.vr[0])) ||
        !std::isupper(static_cast<unsigned char>(h.vr[1])))
      fail(Errc::UnsupportedTransferSyntax, "element " + tag_string(h.tag) + " lacks an explicit VR");
    if (has_long_length(h.vr)) {
      need(12, h.tag);
      h.length = get_u32le(bytes_, pos_ + 8);
      pos_ += 12;
    } else {
      h.length = get_u16le(bytes_, pos_ + 6);
      pos_ += 8;
    }
    return h;
  }

  std::span<const std::uint8_t> take(std::size_t n, Tag tag) {
    need(n, tag);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  void skip_sequence(const Header& h) {
    if (h.length != kUndefinedLength) {
      take(h.length, h.tag);
      return;
    }
    while (true) {
      if (at_end()) fail(Errc::TruncatedElement, "unterminated sequence " + tag_string(h.tag));
      const Header item = read_marker();
      if (item.tag == kSequenceDelimitation) return;
      if (item.tag != kItem)
        fail(Errc::TruncatedElement, "expected item in sequence " + tag_string(h.tag));
      if (item.length != kUndefinedLength) {
        take(item.length, item.tag);
        continue;
      }
      skip_item_body(h.tag);
    }
  }

private:
  void skip_item_body(Tag owner) {
    while (true) {
      if (at_end()) fail(Errc::TruncatedElement, "unterminated item in " + tag_string(owner));
      if (peek_tag() == kItemDelimitation) {
        read_marker();
        return;
      }
      const Header nested = read_header();
      if (nested.vr == "SQ" || (nested.length == kUndefinedLength && nested.vr == "UN"))
        skip_sequence(nested);
      else
        take(nested.length, nested.tag);
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

std::uint16_t us_value(const DicomObject& obj, Tag tag) {
  const Element* e = obj.find(tag);
  if (e->value.size() < 2) fail(Errc::TruncatedElement, tag_string(tag));
  return get_u16le(e->value, 0);
}

}  // namespace

const Element* DicomObject::find(Tag tag) const {
  const auto it = elements.find(tag);
  return it == elements.end() ? nullptr : &it->second;
}

std::optional<std::string> DicomObject::text(Tag tag) const {
  const Element* e = find(tag);
  if (e == nullptr) return std::nullopt;
  return trim_value(e->value);
}

DicomObject parse_dicom(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPreambleSize + 4 ||
      !std::equal(bytes.begin() + kPreambleSize, bytes.begin() + kPreambleSize + 4, "DICM"))
    fail(Errc::BadMagic, "no DICM marker at offset 128");

  DicomObject obj;
  Reader reader(bytes, kPreambleSize + 4);

  // File meta information, always explicit VR little endian.
  std::optional<std::string> transfer_syntax;
  while (!reader.at_end() && reader.peek_tag().group == 0x0002) {
    const auto h = reader.read_header();
    const auto value = reader.take(h.length, h.tag);
    if (h.tag == kTransferSyntaxUid) transfer_syntax = trim_value(value);
  }
  if (!transfer_syntax) fail(Errc::MissingRequiredTag, tag_string(kTransferSyntaxUid));
  if (*transfer_syntax != kExplicitVrLittleEndian)
    fail(Errc::UnsupportedTransferSyntax, *transfer_syntax);
  obj.transfer_syntax = *transfer_syntax;

  std::optional<Tag> previous;
  while (!reader.at_end()) {
    const auto h = reader.read_header();
    if (previous && !(*previous < h.tag))
      fail(Errc::OutOfOrderTag, tag_string(h.tag) + " after " + tag_string(*previous));
    previous = h.tag;
    if (h.vr == "SQ" || (h.length == kUndefinedLength && h.vr == "UN")) {
      reader.skip_sequence(h);
      continue;
    }
    if (h.length == kUndefinedLength)
      fail(Errc::UnsupportedTransferSyntax, "encapsulated value in " + tag_string(h.tag));
    const auto value = reader.take(h.length, h.tag);
    obj.elements.emplace(h.tag, Element{h.vr, {value.begin(), value.end()}});
  }

  for (Tag required : {kModality, kPhotometricInterpretation, kRows, kColumns, kBitsAllocated,
                       kBitsStored, kPixelData})
    if (obj.find(required) == nullptr) fail(Errc::MissingRequiredTag, tag_string(required));

  obj.pixels.rows = us_value(obj, kRows);
  obj.pixels.columns = us_value(obj, kColumns);
  obj.pixels.bits_allocated = us_value(obj, kBitsAllocated);
  obj.pixels.bits_stored = us_value(obj, kBitsStored);
  obj.pixels.photometric = *obj.text(kPhotometricInterpretation);
  return obj;
}

DicomObject load_dicom(const std::filesystem::path& path) { return parse_dicom(read_file(path)); }

namespace {

Photometric photometric_of(const DicomObject& obj) {
  if (obj.pixels.photometric == "MONOCHROME1") return Photometric::Monochrome1;
  if (obj.pixels.photometric == "MONOCHROME2") return Photometric::Monochrome2;
  fail(Errc::UnsupportedPhotometric, obj.pixels.photometric);
}

}  // namespace

RadiographMeta extract_meta(const DicomObject& obj) {
  RadiographMeta meta;
  meta.modality = obj.text(kModality).value_or("");
  if (meta.modality != "CR" && meta.modality != "DX")
    fail(Errc::UnsupportedModality, "'" + meta.modality + "'");
  auto view = obj.text(kSeriesDescription);
  if (!view || view->empty()) view = obj.text(kBodyPartExamined);
  if (!view || view->empty())
    fail(Errc::NoViewText, "neither SeriesDescription nor BodyPartExamined present");
  meta.raw_view = *view;
  meta.laterality = obj.text(kImageLaterality);
  meta.photometric = photometric_of(obj);
  return meta;
}

Image16 extract_pixels(const DicomObject& obj) {
  const auto& pd = obj.pixels;
  const Photometric photometric = photometric_of(obj);
  if (pd.bits_allocated != 16)
    fail(Errc::PixelLengthMismatch, "bits allocated " + std::to_string(pd.bits_allocated));
  if (pd.bits_stored == 0 || pd.bits_stored > 16)
    fail(Errc::PixelLengthMismatch, "bits stored " + std::to_string(pd.bits_stored));
  const auto& raw = obj.find(kPixelData)->value;
  const std::size_t count = std::size_t{pd.rows} * pd.columns;
  if (count == 0 || raw.size() != count * 2)
    fail(Errc::PixelLengthMismatch, std::to_string(pd.rows) + "x" + std::to_string(pd.columns) +
                                        " needs " + std::to_string(count * 2) + " bytes, got " +
                                        std::to_string(raw.size()));
  const auto maxval = static_cast<std::uint16_t>((1u << pd.bits_stored) - 1u);
  std::vector<std::uint16_t> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint16_t v = static_cast<std::uint16_t>(get_u16le(raw, 2 * i) & maxval);
    data[i] = photometric == Photometric::Monochrome1 ? static_cast<std::uint16_t>(maxval - v) : v;
  }
  return Image16(pd.columns, pd.rows, std::move(data));
}

}  // namespace ervc::dicom
