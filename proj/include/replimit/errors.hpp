#pragma once

#include <stdexcept>
#include <string>

namespace replimit {

// Base for every error raised by the library. Subclasses name the failing layer.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file or stream. Message carries the file and location.
class ParseError : public Error {
public:
    using Error::Error;
};

// Precondition violated by the caller (bad shape, out-of-range weight, empty input).
class ContractError : public Error {
public:
    using Error::Error;
};

// Binary file with wrong magic, truncated payload, or invalid contents.
class FormatError : public Error {
public:
    using Error::Error;
};

// Lexicon whose selected entries cannot produce positive normalizers.
class DegenerateLexiconError : public Error {
public:
    using Error::Error;
};

class EmptyCaptionError : public ContractError {
public:
    EmptyCaptionError() : ContractError("empty caption: no alphanumeric tokens") {}
};

// Transport-level failure talking to the chat endpoint (after retries).
class NetworkError : public Error {
public:
    using Error::Error;
};

// Endpoint answered, but the answer was unusable.
class ProviderError : public Error {
public:
    using Error::Error;
};

}  // namespace replimit
