#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace shapetalk {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scene placement ran out of retries.
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (files, JSON payloads, corpus rows).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A retained corpus word has no entry in the class seed.
class UnknownClassError : public Error {
 public:
  explicit UnknownClassError(std::string word)
      : Error("word '" + word + "' has no word class"), word_(std::move(word)) {}
  const std::string& word() const noexcept { return word_; }

 private:
  std::string word_;
};

/// A description could not be turned into at least one constraint.
/// Carries the tokens that tagging had to throw away.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::vector<std::string> discarded = {})
      : Error(what), discarded_(std::move(discarded)) {}
  const std::vector<std::string>& discarded() const noexcept { return discarded_; }

 private:
  std::vector<std::string> discarded_;
};

/// A lookup named a class or word the model does not know.
class LookupError : public Error {
 public:
  using Error::Error;
};

}  // namespace shapetalk
