#include "gaitnet/checkpoint.hpp"

#include <zlib.h>

#include "gaitnet/errors.hpp"
#include "gaitnet/stvt.hpp"

namespace gaitnet {
namespace {

constexpr std::string_view kMagic = "GNCK";

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

std::uint32_t crc_of(std::string_view a, std::string_view b = {}) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(a.data()), static_cast<uInt>(a.size()));
  // crc32 with a null buffer resets to the initial value, so skip empty parts
  if (!b.empty()) crc = crc32(crc, reinterpret_cast<const Bytef*>(b.data()), static_cast<uInt>(b.size()));
  return static_cast<std::uint32_t>(crc);
}

class Cursor {
 public:
  explicit Cursor(std::string_view bytes) : bytes_(bytes) {}

  template <typename U>
  U le(const char* field) {
    const auto raw = take(sizeof(U), field);
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(static_cast<unsigned char>(raw[i])) << (8 * i);
    return value;
  }

  std::string_view take(std::uint64_t n, const char* field) {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("checkpoint: truncated ") + field, pos_);
    auto view = bytes_.substr(pos_, n);
    pos_ += n;
    return view;
  }

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
std::string precision_name() {
  return std::is_same_v<T, float> ? "f32" : "f64";
}

}  // namespace

void require_same_config(const ModelConfig& expected, const ModelConfig& found) {
  if (expected == found) return;
  const auto a = expected.to_json(), b = found.to_json();
  std::string fields;
  for (auto it = a.begin(); it != a.end(); ++it)
    if (!b.contains(it.key()) || b.at(it.key()) != it.value())
      fields += (fields.empty() ? "" : ", ") + it.key() + " (expected " + it.value().dump() + ", checkpoint has " +
                (b.contains(it.key()) ? b.at(it.key()).dump() : "nothing") + ")";
  throw ConfigMismatch("model config mismatch: " + fields);
}

template <typename T>
Checkpoint<T> make_checkpoint(const TrainState<T>& state, const TrainConfig& train, nlohmann::json run) {
  Checkpoint<T> c;
  c.model = state.model.config();
  c.train = train;
  for (const auto& p : state.model.parameters()) c.parameters.push_back({p.name, p.value.clone()});
  c.adam = state.adam;
  c.epoch = state.epoch;
  c.history = state.history;
  c.dropout_rng = state.dropout_rng.state();
  c.run = std::move(run);
  return c;
}

template <typename T>
Model<T> restore_model(const Checkpoint<T>& checkpoint) {
  std::vector<NamedParameter<T>> params;
  for (const auto& p : checkpoint.parameters) params.push_back({p.name, p.value.clone()});
  return Model<T>(checkpoint.model, std::move(params));
}

template <typename T>
TrainState<T> restore_state(const Checkpoint<T>& checkpoint) {
  Rng rng;
  rng.restore(checkpoint.dropout_rng);
  return TrainState<T>{restore_model(checkpoint), checkpoint.adam, checkpoint.epoch, checkpoint.history, rng};
}

template <typename T>
std::string encode_checkpoint(const Checkpoint<T>& c) {
  const nlohmann::json header{{"format", "gaitnet-checkpoint"},
                              {"precision", precision_name<T>()},
                              {"model", c.model.to_json()},
                              {"train", c.train.to_json()},
                              {"epoch", c.epoch},
                              {"adam_step", c.adam.step},
                              {"history", history_to_json(c.history)},
                              {"rng", {{"dropout", c.dropout_rng}}},
                              {"run", c.run}};
  const std::string text = header.dump();
  std::string out(kMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  put_le<std::uint32_t>(out, crc_of(text));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(3 * c.parameters.size()));
  auto section = [&out](const std::string& name, const std::string& payload) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_le<std::uint64_t>(out, payload.size());
    out += payload;
    put_le<std::uint32_t>(out, crc_of(name, payload));
  };
  for (const auto& p : c.parameters) section("param/" + p.name, encode_stvt(p.value));
  for (const char* which : {"adam.m/", "adam.v/"})
    for (std::size_t i = 0; i < c.parameters.size(); ++i) {
      const auto& moments = which[5] == 'm' ? c.adam.m : c.adam.v;
      if (moments.size() != c.parameters.size() || moments[i].size() != c.parameters[i].value.numel())
        throw ContractError("checkpoint: optimizer state does not match the parameters");
      section(which + c.parameters[i].name, encode_stvt(BasicTensor<T>(c.parameters[i].value.shape(), moments[i])));
    }
  return out;
}

template <typename T>
Checkpoint<T> decode_checkpoint(std::string_view bytes) {
  Cursor in(bytes);
  if (in.take(4, "magic") != kMagic) throw FormatError("checkpoint: bad magic", 0);
  const auto version = in.le<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version), 4);
  const auto header_len = in.le<std::uint64_t>("header length");
  const std::size_t header_at = in.pos();
  const auto text = in.take(header_len, "header");
  if (in.le<std::uint32_t>("header checksum") != crc_of(text))
    throw IntegrityError("checkpoint: header checksum mismatch", header_at);

  Checkpoint<T> c;
  try {
    const auto h = nlohmann::json::parse(text);
    if (h.at("format") != "gaitnet-checkpoint") throw FormatError("checkpoint: header is not a checkpoint", header_at);
    c.model = ModelConfig::from_json(h.at("model"));
    c.train = TrainConfig::from_json(h.at("train"));
    c.epoch = h.at("epoch").get<std::size_t>();
    c.adam.step = h.at("adam_step").get<std::uint64_t>();
    c.history = history_from_json(h.at("history"));
    c.dropout_rng = h.at("rng").at("dropout").get<std::string>();
    c.run = h.at("run");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed header: ") + e.what(), header_at);
  } catch (const FormatError&) {
    throw;
  } catch (const InputError& e) {
    throw FormatError(std::string("checkpoint: invalid config in header: ") + e.what(), header_at);
  }

  const auto layout = parameter_layout(c.model);
  const auto count = in.le<std::uint32_t>("section count");
  if (count != 3 * layout.size())
    throw FormatError("checkpoint: expected " + std::to_string(3 * layout.size()) + " sections, found " +
                          std::to_string(count),
                      in.pos() - 4);
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t at = in.pos();
    const std::size_t i = s % layout.size();
    const std::string prefix = s < layout.size() ? "param/" : (s < 2 * layout.size() ? "adam.m/" : "adam.v/");
    const auto name = in.take(in.le<std::uint32_t>("section name length"), "section name");
    const auto payload = in.take(in.le<std::uint64_t>("section length"), "section payload");
    if (in.le<std::uint32_t>("section checksum") != crc_of(name, payload))
      throw IntegrityError("checkpoint: checksum mismatch in section '" + std::string(name) + "'", at);
    if (name != prefix + layout[i].name)
      throw FormatError("checkpoint: expected section '" + prefix + layout[i].name + "', found '" + std::string(name) +
                            "'",
                        at);
    std::size_t pos = 0;
    const std::size_t payload_at = at + 4 + name.size() + 8;
    auto tensor = decode_stvt<T>(payload, pos, payload_at);
    if (pos != payload.size()) throw FormatError("checkpoint: trailing bytes in section payload", payload_at + pos);
    if (tensor.shape() != layout[i].shape)
      throw FormatError("checkpoint: section '" + std::string(name) + "' has shape " + to_string(tensor.shape()) +
                            ", expected " + to_string(layout[i].shape),
                        at);
    if (s < layout.size()) {
      c.parameters.push_back({layout[i].name, std::move(tensor)});
    } else {
      auto& dst = s < 2 * layout.size() ? c.adam.m : c.adam.v;
      dst.emplace_back(tensor.data().begin(), tensor.data().end());
    }
  }
  if (!in.done()) throw FormatError("checkpoint: trailing bytes after last section", in.pos());
  return c;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Checkpoint<T>& checkpoint) {
  write_file_bytes(path, encode_checkpoint(checkpoint));
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint<T>(read_file_bytes(path));
}

#define GAITNET_INSTANTIATE(T)                                                                      \
  template Checkpoint<T> make_checkpoint(const TrainState<T>&, const TrainConfig&, nlohmann::json); \
  template TrainState<T> restore_state(const Checkpoint<T>&);                                       \
  template Model<T> restore_model(const Checkpoint<T>&);                                            \
  template std::string encode_checkpoint(const Checkpoint<T>&);                                     \
  template Checkpoint<T> decode_checkpoint<T>(std::string_view);                                    \
  template void save_checkpoint(const std::filesystem::path&, const Checkpoint<T>&);                \
  template Checkpoint<T> load_checkpoint<T>(const std::filesystem::path&);

GAITNET_INSTANTIATE(float)
GAITNET_INSTANTIATE(double)

#undef GAITNET_INSTANTIATE

}  // namespace gaitnet
