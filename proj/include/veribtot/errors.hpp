#pragma once

#include <stdexcept>
#include <string>

namespace veribtot {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// Invalid user-supplied value (empty task description, bad identifier, ...).
class ValidationError : public Error {
public:
  using Error::Error;
};

/// A tree mutation that would violate the structural contract.
class TreeStructureError : public Error {
public:
  using Error::Error;
};

/// Unknown or discarded node id.
class NodeLookupError : public Error {
public:
  using Error::Error;
};

/// An LLM response failed to parse after the format-reminder retry.
class OperatorParseError : public Error {
public:
  using Error::Error;
};

/// A branch plan outside the [2, max_fanout] bounds.
class FanoutError : public Error {
public:
  using Error::Error;
};

/// A generated design declares the wrong module name after one corrective re-ask.
class NameMismatchError : public Error {
public:
  using Error::Error;
};

/// A non-leaf rethink failed to instantiate a verified child after one re-ask.
class MissingInstantiationError : public Error {
public:
  using Error::Error;
};

/// Aggregation attempted on a tree with unverified live nodes.
class AggregationError : public Error {
public:
  using Error::Error;
};

/// The configured HDL toolchain binaries cannot be resolved.
class ToolchainUnavailableError : public Error {
public:
  using Error::Error;
};

/// HTTP transport failed after the retry budget.
class TransportError : public Error {
public:
  using Error::Error;
};

/// The endpoint rejected the credentials.
class AuthError : public Error {
public:
  using Error::Error;
};

/// A replay transcript ran out of records.
class ReplayExhaustedError : public Error {
public:
  using Error::Error;
};

/// Strict replay saw a request whose digest differs from the recording.
class ReplayDigestMismatchError : public Error {
public:
  using Error::Error;
};

/// A benchmark suite directory is malformed.
class SuiteFormatError : public Error {
public:
  using Error::Error;
};

}  // namespace veribtot
