#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pcqa {

// Base for every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

// Mixed-modality or otherwise unusable comparison pair.
class InvalidPair : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class InvalidRank : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class ShapeError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class IoError : public Error {
public:
    IoError(const std::string& what, std::string path)
        : Error(what + ": " + path), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t byte_offset)
        : Error(what + " (at byte " + std::to_string(byte_offset) + ")"), offset_(byte_offset) {}
    std::size_t byte_offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class DivergenceError : public Error {
public:
    explicit DivergenceError(std::size_t step)
        : Error("non-finite loss at step " + std::to_string(step)), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

// Comparator failures always carry the (test, anchor) id pair of the query.
class ComparatorError : public Error {
public:
    ComparatorError(const std::string& what, std::string test_id, std::string anchor_id)
        : Error(what + " [test=" + test_id + ", anchor=" + anchor_id + "]"),
          test_id_(std::move(test_id)),
          anchor_id_(std::move(anchor_id)) {}
    const std::string& test_id() const noexcept { return test_id_; }
    const std::string& anchor_id() const noexcept { return anchor_id_; }

private:
    std::string test_id_;
    std::string anchor_id_;
};

class AssetError : public ComparatorError {
public:
    using ComparatorError::ComparatorError;
};

class ReplayMiss : public ComparatorError {
public:
    using ComparatorError::ComparatorError;
};

// Connection refused, timeout, or any failure before a response arrived.
class TransportError : public ComparatorError {
public:
    using ComparatorError::ComparatorError;
};

// A response arrived but violated the wire protocol (status, schema, distribution).
class ProtocolError : public ComparatorError {
public:
    using ComparatorError::ComparatorError;
};

class EvaluationError : public Error {
public:
    using Error::Error;
};

// Configuration problems detected before any work starts.
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace pcqa
