#pragma once

#include <stdexcept>
#include <string>

namespace gmacn {

// Error taxonomy shared by the whole library. The CLI maps any of these to
// exit code 1; command-line misuse is handled separately with exit code 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Matrix/tensor dimension mismatch. Message names both shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Invalid argument value (threshold <= 0, label out of range, ...).
class ParamError : public Error {
public:
    using Error::Error;
};

// Malformed input file; message carries the location when known.
class FormatError : public Error {
public:
    using Error::Error;
};

// Files that do not belong together (montage hash mismatch, ablated model
// asked for attention saliency, ...).
class CompatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace gmacn
