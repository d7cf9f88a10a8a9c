#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tangle {

/// Base of every error raised by the library. `module()` names the
/// subsystem that raised it so the CLI can tag messages.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

class InvalidArgument : public Error {
 public:
  InvalidArgument(std::string module, const std::string& what) : Error(std::move(module), what) {}
};

/// A row or column failed validation. `row()` is the 1-based line in the
/// source file (0 when not tied to a row).
class ValueError : public Error {
 public:
  ValueError(std::size_t row, const std::string& what)
      : Error("data-io", "row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& what)
      : Error("data-io", "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class InstabilityError : public Error {
 public:
  explicit InstabilityError(const std::string& what) : Error("simulate", what) {}
};

class NoGrainsAttached : public Error {
 public:
  NoGrainsAttached() : Error("pick", "magnet attached no ferromagnetic grains") {}
};

class DegenerateDesign : public Error {
 public:
  explicit DegenerateDesign(const std::string& what) : Error("model", what) {}
};

class ProvenanceError : public Error {
 public:
  explicit ProvenanceError(const std::string& what) : Error("data-io", what) {}
};

class ChecksumError : public Error {
 public:
  explicit ChecksumError(const std::string& what) : Error("data-io", what) {}
};

class ConfigError : public Error {
 public:
  ConfigError(std::size_t line, const std::string& key, const std::string& what)
      : Error("config", "line " + std::to_string(line) + " key '" + key + "': " + what) {}
};

}  // namespace tangle
