#pragma once

#include <stdexcept>
#include <string>

namespace dscn {

// Base class for every library error. Specific types below map one-to-one
// onto the failure classes reported by the CLI.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// -- audio container
struct MalformedContainer : Error {
  using Error::Error;
};
struct UnsupportedFormat : Error {
  using Error::Error;
};

// -- segmenter
struct RecordingTooShort : Error {
  using Error::Error;
};
struct WindowOutOfRange : Error {
  using Error::Error;
};

// -- dsp
struct InvalidFilterSpec : Error {
  using Error::Error;
};
struct CutoffTooHigh : Error {
  using Error::Error;
};
struct SignalTooShort : Error {
  using Error::Error;
};
struct EmptySpectrogram : Error {
  using Error::Error;
};

// -- dataset
struct ManifestParseError : Error {
  using Error::Error;
};
struct AlreadySplit : Error {
  using Error::Error;
};
struct SingleClass : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

// -- nn
struct InvalidConfig : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct ChecksumMismatch : Error {
  using Error::Error;
};
struct VersionMismatch : Error {
  using Error::Error;
};

// -- trainer
struct DivergedImmediately : Error {
  using Error::Error;
};
struct NoDescent : Error {
  using Error::Error;
};
struct BodyNotFrozen : Error {
  using Error::Error;
};
struct EmptySplit : Error {
  using Error::Error;
};

// -- metrics
struct LengthMismatch : Error {
  using Error::Error;
};
struct EmptyInput : Error {
  using Error::Error;
};

}  // namespace dscn
