#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tensor/tensor.hpp"

namespace mmae::data {

enum class Label { Normal, Abnormal, Unlabeled };

const char* to_string(Label label) noexcept;
Label parse_label(const std::string& s);

// K leads × Q samples, lead-major, with an optional per-point anomaly mask of
// the same shape (1 = anomalous).
struct EcgRecord {
  std::string id;
  tensor::Tensor<float> signal;
  std::uint32_t fs = 0;
  Label label = Label::Unlabeled;
  std::optional<std::vector<std::uint8_t>> point_mask;

  std::size_t leads() const noexcept { return signal.rows(); }
  std::size_t samples() const noexcept { return signal.cols(); }

  // Throws on non-finite samples or a mask of the wrong size.
  void validate() const;
};

EcgRecord make_record(std::string id, std::size_t leads, std::size_t samples, std::uint32_t fs,
                      std::vector<float> signal);

// Sidecar paths derived from a record path: "<stem>.meta.json", "<stem>.mask".
std::filesystem::path sidecar_path(const std::filesystem::path& record_path);
std::filesystem::path mask_path(const std::filesystem::path& record_path);

// ECGB layout: "ECGB" | u16 version | u16 K | u32 Q | u32 fs | K·Q float32,
// all little-endian, lead-major. Writes the sidecar (and mask file) next to it.
void save_record(const EcgRecord& record, const std::filesystem::path& path);

// CSV layout: header row of lead names, then Q rows of K values. fs, id and
// label travel in the sidecar.
void save_record_csv(const EcgRecord& record, const std::filesystem::path& path);

// Dispatches on the file's magic bytes (ECGB) or a .csv extension.
EcgRecord load_record(const std::filesystem::path& path);

std::vector<std::string> lead_names(std::size_t leads);

}  // namespace mmae::data
