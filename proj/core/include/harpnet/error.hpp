#pragma once

#include <stdexcept>
#include <string>

namespace harpnet {

enum class ErrorCode {
  kInvalidArgument,
  kShape,
  kDegenerateFrame,
  kUnstableFilter,
  kUnsupportedFormat,
  kIo,
  kConfig,
  kMissingData,
  kDivergence,
  kModelMismatch,
  kCorruptStream,
  kBadMagic,
  kVersionMismatch,
  kChecksumMismatch,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // True for every error that means "the encoded stream cannot be trusted".
  bool is_stream_corruption() const noexcept {
    return code_ == ErrorCode::kCorruptStream || code_ == ErrorCode::kBadMagic ||
           code_ == ErrorCode::kVersionMismatch || code_ == ErrorCode::kChecksumMismatch;
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace harpnet
