#pragma once

#include <stdexcept>
#include <string>

namespace l2h {

/// Base of every exception the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Input bytes do not follow the expected file format.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Parsed data violates a domain invariant (non-finite values, length mismatch, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Problem size too small to be meaningful (K < 2, N < 1, fewer than two items).
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// A call violated an operation's precondition (bad node id, full mask, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

} // namespace l2h
