#pragma once

#include <stdexcept>
#include <string>

namespace graphspy {

// Category decides the CLI exit code: usage 2, data 3, numeric 4.
enum class ErrorCategory { Usage, Data, Numeric };

class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message,
        ErrorCategory category = ErrorCategory::Data)
      : std::runtime_error(message), kind_(std::move(kind)), category_(category) {}

  const std::string& kind() const noexcept { return kind_; }
  ErrorCategory category() const noexcept { return category_; }

 private:
  std::string kind_;
  ErrorCategory category_;
};

// Parse errors carry the 1-based source line they were raised on.
class ParseError : public Error {
 public:
  ParseError(std::string kind, int line, const std::string& reason)
      : Error(std::move(kind), "line " + std::to_string(line) + ": " + reason),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class SyntaxError : public ParseError {
 public:
  SyntaxError(int line, const std::string& reason) : ParseError("SyntaxError", line, reason) {}
};

class UnknownMnemonic : public ParseError {
 public:
  UnknownMnemonic(int line, const std::string& mnemonic)
      : ParseError("UnknownMnemonic", line, "unknown mnemonic '" + mnemonic + "'") {}
};

class UndefinedLabel : public ParseError {
 public:
  UndefinedLabel(int line, const std::string& label)
      : ParseError("UndefinedLabel", line, "undefined label '" + label + "'") {}
};

class UndefinedProcedure : public ParseError {
 public:
  UndefinedProcedure(int line, const std::string& name)
      : ParseError("UndefinedProcedure", line, "undefined procedure '" + name + "'") {}
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& message)
      : Error("ShapeMismatch", message, ErrorCategory::Numeric) {}
};

}  // namespace graphspy
