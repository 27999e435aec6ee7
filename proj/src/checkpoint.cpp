#include "ervc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>

#include "ervc/io.hpp"

namespace ervc {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O copies IEEE-754 values directly");

namespace {

constexpr std::string_view kMagic = "ERVC1";

template <typename V>
void put_values(std::vector<std::uint8_t>& out, const std::vector<V>& values) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
  out.insert(out.end(), p, p + values.size() * sizeof(V));
}

class Cursor {
public:
  explicit Cursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail(Errc::BadCheckpoint, "truncated checkpoint");
  }
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    const auto v = get_u32le(bytes_, pos_);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    const auto v = get_u64le(bytes_, pos_);
    pos_ += 8;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <typename V>
std::vector<V> get_values(Cursor& cur, std::size_t count) {
  if (count > (std::size_t{1} << 40) / sizeof(V)) fail(Errc::BadCheckpoint, "tensor too large");
  const auto raw = cur.take(count * sizeof(V));
  std::vector<V> values(count);
  std::memcpy(values.data(), raw.data(), raw.size());
  return values;
}

}  // namespace

std::vector<std::uint8_t> write_checkpoint(std::span<const CheckpointTensor> tensors) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  put_u32le(out, kCheckpointVersion);
  put_u32le(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    const std::size_t count = std::visit([](const auto& v) { return v.size(); }, t.values);
    if (count != shape_size(t.shape))
      fail(Errc::BadCheckpoint, t.name + ": value count does not match shape");
    put_u32le(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    out.push_back(static_cast<std::uint8_t>(t.dtype()));
    put_u32le(out, static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) put_u64le(out, d);
    std::visit([&out](const auto& v) { put_values(out, v); }, t.values);
  }
  return out;
}

std::vector<CheckpointTensor> read_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() ||
      std::string_view(reinterpret_cast<const char*>(bytes.data()), kMagic.size()) != kMagic)
    fail(Errc::BadCheckpoint, "bad magic");
  Cursor cur(bytes.subspan(kMagic.size()));
  const std::uint32_t version = cur.u32();
  if (version != kCheckpointVersion)
    fail(Errc::BadCheckpoint, "unsupported version " + std::to_string(version));
  const std::uint32_t count = cur.u32();
  std::vector<CheckpointTensor> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    const std::uint32_t name_len = cur.u32();
    const auto name = cur.take(name_len);
    t.name.assign(name.begin(), name.end());
    const std::uint8_t dtype = cur.u8();
    const std::uint32_t rank = cur.u32();
    if (rank > 16) fail(Errc::BadCheckpoint, t.name + ": implausible rank");
    for (std::uint32_t r = 0; r < rank; ++r) {
      const std::uint64_t d = cur.u64();
      if (d == 0) fail(Errc::BadCheckpoint, t.name + ": zero dimension");
      t.shape.push_back(static_cast<std::size_t>(d));
    }
    const std::size_t n = shape_size(t.shape);
    if (dtype == static_cast<std::uint8_t>(DType::F32))
      t.values = get_values<float>(cur, n);
    else if (dtype == static_cast<std::uint8_t>(DType::F64))
      t.values = get_values<double>(cur, n);
    else
      fail(Errc::BadCheckpoint, t.name + ": unknown dtype " + std::to_string(dtype));
    tensors.push_back(std::move(t));
  }
  if (!cur.at_end()) fail(Errc::BadCheckpoint, "trailing bytes after last tensor");
  return tensors;
}

template <typename T>
std::vector<CheckpointTensor> model_state(Model<T>& model) {
  std::vector<CheckpointTensor> out;
  for (const auto& nt : model.state()) {
    const auto v = nt.tensor->values();
    out.push_back({nt.name, nt.tensor->shape(), std::vector<T>(v.begin(), v.end())});
  }
  return out;
}

template <typename T>
void load_model_state(Model<T>& model, std::span<const CheckpointTensor> tensors) {
  std::map<std::string_view, const CheckpointTensor*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t;
  for (const auto& nt : model.state()) {
    const auto it = by_name.find(nt.name);
    if (it == by_name.end()) fail(Errc::BadCheckpoint, "missing tensor " + nt.name);
    const CheckpointTensor& t = *it->second;
    if (t.shape != nt.tensor->shape())
      fail(Errc::BadCheckpoint, nt.name + ": shape " + shape_string(t.shape) + " vs model " +
                                    shape_string(nt.tensor->shape()));
    std::visit(
        [&nt](const auto& v) {
          for (std::size_t i = 0; i < v.size(); ++i) (*nt.tensor)[i] = static_cast<T>(v[i]);
        },
        t.values);
  }
}

template std::vector<CheckpointTensor> model_state<float>(Model<float>&);
template std::vector<CheckpointTensor> model_state<double>(Model<double>&);
template void load_model_state<float>(Model<float>&, std::span<const CheckpointTensor>);
template void load_model_state<double>(Model<double>&, std::span<const CheckpointTensor>);

}  // namespace ervc
