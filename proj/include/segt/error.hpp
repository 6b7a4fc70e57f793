#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace segt {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class InvalidKernel : public Error {
public:
    using Error::Error;
};

/// Raised when a sequence is too short for a sampling/segmentation stage.
/// `scale()` is the offending scale index, or -1 when not scale specific.
class SequenceTooShort : public Error {
public:
    SequenceTooShort(const std::string& what, int scale = -1)
        : Error(what), scale_(scale) {}
    int scale() const noexcept { return scale_; }

private:
    int scale_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class UnsupportedVersion : public FormatError {
public:
    using FormatError::FormatError;
};

class AlphabetError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DuplicateError : public Error {
public:
    explicit DuplicateError(const std::string& accession)
        : Error("duplicate accession: " + accession), accession_(accession) {}
    const std::string& accession() const noexcept { return accession_; }

private:
    std::string accession_;
};

class MissingInput : public Error {
public:
    explicit MissingInput(const std::string& accession)
        : Error("missing embedding for accession: " + accession), accession_(accession) {}
    const std::string& accession() const noexcept { return accession_; }

private:
    std::string accession_;
};

class ConfigMismatch : public Error {
public:
    using Error::Error;
};

class StepRejected : public Error {
public:
    using Error::Error;
};

class CheckFailed : public Error {
public:
    using Error::Error;
};

class MissingVariant : public Error {
public:
    MissingVariant(std::size_t position, char letter)
        : Error("missing variant embedding for position " + std::to_string(position + 1) +
                " letter " + std::string(1, letter)),
          position_(position), letter_(letter) {}
    std::size_t position() const noexcept { return position_; }
    char letter() const noexcept { return letter_; }

private:
    std::size_t position_;
    char letter_;
};

} // namespace segt
