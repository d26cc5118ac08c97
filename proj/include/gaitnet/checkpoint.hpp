#pragma once

// Checkpoint container, all integers little-endian:
//
//   offset  size  field
//   0       4     magic "GNCK"
//   4       4     version (u32) = 1
//   8       8     header length L (u64)
//   16      L     header, UTF-8 JSON object
//   16+L    4     CRC-32 of the header bytes (u32)
//   20+L    4     section count N (u32)
//   then N sections, each:
//           4     name length n (u32)
//           n     name, UTF-8
//           8     payload length p (u64)
//           p     payload: one STVT tensor
//           4     CRC-32 over name bytes followed by payload bytes (u32)
//
// Sections appear in parameter order: "param/<name>" for every parameter,
// then "adam.m/<name>" and "adam.v/<name>" for every parameter. Nothing may
// follow the last section.

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "gaitnet/train.hpp"

namespace gaitnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
struct Checkpoint {
  ModelConfig model;
  TrainConfig train;
  std::vector<NamedParameter<T>> parameters;  // deep copies
  AdamState<T> adam;
  std::size_t epoch = 0;
  TrainHistory history;
  std::string dropout_rng;  // Rng::state()
  nlohmann::json run = nlohmann::json::object();  // seeds and other run identifiers
};

template <typename T>
Checkpoint<T> make_checkpoint(const TrainState<T>& state, const TrainConfig& train,
                              nlohmann::json run = nlohmann::json::object());

// Rebuilds a training state that continues exactly where the checkpoint
// stopped.
template <typename T>
TrainState<T> restore_state(const Checkpoint<T>& checkpoint);

template <typename T>
Model<T> restore_model(const Checkpoint<T>& checkpoint);

template <typename T>
std::string encode_checkpoint(const Checkpoint<T>& checkpoint);

// FormatError for structural problems, IntegrityError for checksum
// failures. Parameters stored in the other precision are converted.
template <typename T>
Checkpoint<T> decode_checkpoint(std::string_view bytes);

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Checkpoint<T>& checkpoint);

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path);

// Throws ConfigMismatch listing the fields that differ.
void require_same_config(const ModelConfig& expected, const ModelConfig& found);

}  // namespace gaitnet
