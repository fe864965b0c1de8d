#pragma once

#include <stdexcept>
#include <string>

namespace promptseg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// imaging
struct DecodeError : Error { using Error::Error; };
struct UnsupportedFormat : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };

// similarity / retrieval
struct ImageTooSmall : Error { using Error::Error; };
struct EmptyPool : Error { using Error::Error; };
struct KTooLarge : Error { using Error::Error; };

// prompt / backends
struct EmptyExemplarList : Error { using Error::Error; };
struct PatchLargerThanImage : Error { using Error::Error; };
struct ConnectError : Error { using Error::Error; };
struct TimeoutError : Error { using Error::Error; };
struct ProtocolError : Error { using Error::Error; };
struct ServerError : Error { using Error::Error; };

// dataset / evaluation
struct ParseError : Error { using Error::Error; };
struct DuplicateId : Error { using Error::Error; };
struct MissingFile : Error { using Error::Error; };
struct UnknownTestId : Error { using Error::Error; };
struct EmptyRecordList : Error { using Error::Error; };
struct EvalError : Error { using Error::Error; };

} // namespace promptseg
