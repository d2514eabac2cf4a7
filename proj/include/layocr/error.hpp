#pragma once

#include <stdexcept>
#include <string>

namespace layocr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error { using Error::Error; };
struct DegenerateBox : Error { using Error::Error; };
struct PageMismatch : Error { using Error::Error; };
struct InsufficientSamples : Error { using Error::Error; };
struct ImageTooSmall : Error { using Error::Error; };
struct ImageIoError : Error { using Error::Error; };
struct EmptyCorpus : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// Engine failure for one region; `region` identifies it within its page.
struct EngineError : Error {
  EngineError(std::string region, const std::string& what)
      : Error("region " + region + ": " + what), region(std::move(region)) {}
  std::string region;
};

}  // namespace layocr
