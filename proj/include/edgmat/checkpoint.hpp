#pragma once

// Checkpoint layout:
//   "EDGMAT1"                      7-byte magic (the digit is the format version)
//   u64 little-endian              header length in bytes
//   header text                    ModelConfig as `key = value` lines followed by
//                                  one `param.<name> = <rows>x<cols>` line per
//                                  parameter, in manifest order
//   payload                        every parameter as little-endian float32,
//                                  row-major, in manifest order
//
// Values are stored at 32-bit precision, so save -> load -> save is
// byte-identical while a round trip from a freshly trained model is not.

#include <filesystem>
#include <stdexcept>
#include <string>

#include "edgmat/model.hpp"

namespace edgmat {

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, version_mismatch, truncated, malformed_header, shape_mismatch, trailing_data };

  CheckpointError(Kind kind, const std::string& message, std::string parameter = {})
      : std::runtime_error(message), kind_(kind), parameter_(std::move(parameter)) {}

  Kind kind() const noexcept { return kind_; }
  /// Offending parameter name for shape_mismatch, empty otherwise.
  const std::string& parameter() const noexcept { return parameter_; }

 private:
  Kind kind_;
  std::string parameter_;
};

const char* to_string(CheckpointError::Kind kind) noexcept;

void save_checkpoint(const EdgmatModel& model, const std::filesystem::path& path);
EdgmatModel load_checkpoint(const std::filesystem::path& path);

std::string serialize_checkpoint(const EdgmatModel& model);
EdgmatModel deserialize_checkpoint(std::string_view bytes);

}  // namespace edgmat
