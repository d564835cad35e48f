#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace ipvault {

/// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on a value was violated (modulus too small, c >= N, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class FactorFailure : public Error {
public:
    using Error::Error;
};

/// Raised by modular inversion; carries the offending gcd so callers can
/// try to use it as a factor.
class NotInvertible : public Error {
public:
    NotInvertible(std::string msg, std::string gcd_hex)
        : Error(std::move(msg)), gcd_hex_(std::move(gcd_hex)) {}
    const std::string& gcd_hex() const noexcept { return gcd_hex_; }

private:
    std::string gcd_hex_;
};

class KeyTooSmall : public Error {
public:
    using Error::Error;
};

class UnwrapError : public Error {
public:
    using Error::Error;
};

class PaddingError : public Error {
public:
    using Error::Error;
};

class DigestMismatch : public Error {
public:
    using Error::Error;
};

class NoSuchToolBlock : public Error {
public:
    using Error::Error;
};

/// Text format violation; carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::string msg, std::size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A key-recovery verification step failed; carries the verdict name.
class AttackInconsistent : public Error {
public:
    AttackInconsistent(std::string msg, std::string verdict)
        : Error(std::move(msg)), verdict_(std::move(verdict)) {}
    const std::string& verdict() const noexcept { return verdict_; }

private:
    std::string verdict_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace ipvault
