#pragma once

#include <stdexcept>
#include <string>

namespace rulforge {

/// Base for every error raised by the library. The CLI maps the category to
/// an exit code, so subclasses only differ in how they are classified.
class Error : public std::runtime_error {
 public:
  enum class Category { config, data, compute };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

/// Invalid argument to an operation (bad size, unknown id, out of range).
class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& what) : Error(Category::config, what) {}
};

/// Configuration file or search-space override that fails validation.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(Category::config, what) {}
};

/// CSV/JSON header or column layout does not match the expected schema.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::string column = {})
      : Error(Category::data, what), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

/// A value could not be parsed or is not finite.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : Error(Category::data, what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Time stamps or cycles of a unit are not monotone.
class OrderingError : public Error {
 public:
  explicit OrderingError(const std::string& what) : Error(Category::data, what) {}
};

/// Data is present but unusable for the requested operation.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(Category::data, what) {}
};

/// Tensor or layer shapes do not chain.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(Category::compute, what) {}
};

/// API misuse, e.g. a backward pass over a tape from another network.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(Category::compute, what) {}
};

/// Training diverged (non-finite loss).
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch)
      : Error(Category::compute, what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace rulforge
