#include "gaitnet/stvt.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <limits>

namespace gaitnet {
namespace {

constexpr std::string_view kMagic = "STVT";
constexpr std::uint32_t kMaxRank = 16;

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(std::string_view bytes, std::size_t& pos, std::uint64_t base) : bytes_(bytes), pos_(pos), base_(base) {}

  template <typename U>
  U le(const char* field) {
    need(sizeof(U), field);
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      value |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return value;
  }

  void need(std::size_t n, const char* field) const {
    if (bytes_.size() - pos_ < n)
      throw FormatError(std::string("STVT: truncated while reading ") + field, offset());
  }

  std::string_view take(std::size_t n, const char* field) {
    need(n, field);
    auto view = bytes_.substr(pos_, n);
    pos_ += n;
    return view;
  }

  std::uint64_t offset() const { return base_ + pos_; }

 private:
  std::string_view bytes_;
  std::size_t& pos_;
  std::uint64_t base_;
};

template <typename T, typename Bits>
void decode_payload(Reader& r, std::size_t n, std::vector<T>& out) {
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if constexpr (sizeof(Bits) == 4)
      out[i] = static_cast<T>(std::bit_cast<float>(r.le<std::uint32_t>("payload")));
    else
      out[i] = static_cast<T>(std::bit_cast<double>(r.le<std::uint64_t>("payload")));
  }
}

}  // namespace

template <typename T>
std::string encode_stvt(const BasicTensor<T>& tensor) {
  std::string out;
  out.reserve(32 + tensor.numel() * sizeof(T));
  out.append(kMagic);
  put_le<std::uint32_t>(out, kStvtVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.ndim()));
  for (auto extent : tensor.shape()) put_le<std::uint64_t>(out, extent);
  if constexpr (std::is_same_v<T, float>) {
    out.push_back(static_cast<char>(kStvtFloat32));
    for (float v : tensor.data()) put_le(out, std::bit_cast<std::uint32_t>(v));
  } else {
    out.push_back(static_cast<char>(kStvtFloat64));
    for (double v : tensor.data()) put_le(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

template <typename T>
BasicTensor<T> decode_stvt(std::string_view bytes, std::size_t& pos, std::uint64_t base_offset) {
  Reader r(bytes, pos, base_offset);
  const auto magic_at = r.offset();
  r.need(4, "magic");
  if (r.take(4, "magic") != kMagic) throw FormatError("STVT: bad magic, expected \"STVT\"", magic_at);
  const auto version_at = r.offset();
  const auto version = r.le<std::uint32_t>("version");
  if (version != kStvtVersion)
    throw FormatError("STVT: unsupported version " + std::to_string(version), version_at);
  const auto rank_at = r.offset();
  const auto rank = r.le<std::uint32_t>("ndim");
  if (rank == 0 || rank > kMaxRank) throw FormatError("STVT: invalid ndim " + std::to_string(rank), rank_at);
  Shape shape(rank);
  std::size_t numel = 1;
  for (auto& extent : shape) {
    const auto extent_at = r.offset();
    extent = r.le<std::uint64_t>("extent");
    if (extent == 0) throw FormatError("STVT: zero extent", extent_at);
    if (extent > std::numeric_limits<std::size_t>::max() / numel)
      throw FormatError("STVT: element count overflows", extent_at);
    numel *= extent;
  }
  const auto dtype_at = r.offset();
  const auto dtype = r.le<std::uint8_t>("dtype");
  const std::size_t width = dtype == kStvtFloat32 ? 4 : dtype == kStvtFloat64 ? 8 : 0;
  if (width == 0) throw FormatError("STVT: unknown dtype code " + std::to_string(dtype), dtype_at);
  if (numel > (bytes.size() - pos) / width) throw FormatError("STVT: truncated payload", r.offset());

  std::vector<T> data;
  if (width == 4)
    decode_payload<T, std::uint32_t>(r, numel, data);
  else
    decode_payload<T, std::uint64_t>(r, numel, data);
  return BasicTensor<T>(std::move(shape), std::move(data));
}

std::uint8_t stvt_dtype(std::string_view bytes) {
  std::size_t pos = 0;
  Reader r(bytes, pos, 0);
  if (r.take(4, "magic") != kMagic) throw FormatError("STVT: bad magic, expected \"STVT\"", 0);
  r.le<std::uint32_t>("version");
  const auto rank = r.le<std::uint32_t>("ndim");
  if (rank == 0 || rank > kMaxRank) throw FormatError("STVT: invalid ndim", 8);
  for (std::uint32_t i = 0; i < rank; ++i) r.le<std::uint64_t>("extent");
  return r.le<std::uint8_t>("dtype");
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidArgument("write failed for '" + path.string() + "'");
}

template <typename T>
void write_raw_tensor(const std::filesystem::path& path, const BasicTensor<T>& tensor) {
  write_file_bytes(path, encode_stvt(tensor));
}

template <typename T>
BasicTensor<T> read_raw_tensor(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  std::size_t pos = 0;
  auto tensor = decode_stvt<T>(bytes, pos);
  if (pos != bytes.size()) throw FormatError("STVT: trailing bytes after payload in " + path.string(), pos);
  return tensor;
}

template std::string encode_stvt(const BasicTensor<float>&);
template std::string encode_stvt(const BasicTensor<double>&);
template BasicTensor<float> decode_stvt<float>(std::string_view, std::size_t&, std::uint64_t);
template BasicTensor<double> decode_stvt<double>(std::string_view, std::size_t&, std::uint64_t);
template void write_raw_tensor(const std::filesystem::path&, const BasicTensor<float>&);
template void write_raw_tensor(const std::filesystem::path&, const BasicTensor<double>&);
template BasicTensor<float> read_raw_tensor<float>(const std::filesystem::path&);
template BasicTensor<double> read_raw_tensor<double>(const std::filesystem::path&);

}  // namespace gaitnet
