#pragma once

#include <stdexcept>
#include <string>

namespace smem {

// Base for every error the library raises.  Each failure mode gets its own
// type so callers can catch exactly what they can recover from.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class EmptyActiveSet : public Error {
 public:
  using Error::Error;
};

class AllCoordinatesPruned : public Error {
 public:
  using Error::Error;
};

class UnsupportedExponent : public Error {
 public:
  using Error::Error;
};

class UnsupportedPair : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class InvalidShape : public Error {
 public:
  using Error::Error;
};

class UnknownPreset : public Error {
 public:
  using Error::Error;
};

class DegenerateDof : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace smem
