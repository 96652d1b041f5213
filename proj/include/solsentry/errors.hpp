// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace solsentry {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t line, std::size_t column, std::string expected, std::string found);

    std::size_t line;
    std::size_t column;
    std::string expected;
    std::string found;
};

/// Valid Solidity that falls outside the parsed subset (inline assembly, structs, ...).
class UnsupportedConstruct : public Error {
public:
    UnsupportedConstruct(std::size_t line, std::size_t column, std::string construct);

    std::size_t line;
    std::size_t column;
    std::string construct;
};

class MalformedAst : public Error {
public:
    MalformedAst(std::string path, std::string reason);

    std::string path;
    std::string reason;
};

class PrintUnsupported : public Error {
public:
    explicit PrintUnsupported(std::string node_type);

    std::string node_type;
};

class NoBody : public Error {
public:
    using Error::Error;
};

class DuplicateDetectorId : public Error {
public:
    explicit DuplicateDetectorId(const std::string& id)
        : Error("duplicate detector id: " + id), detector_id(id) {}

    std::string detector_id;
};

} // namespace solsentry
