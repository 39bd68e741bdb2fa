#pragma once

#include <stdexcept>
#include <string>

namespace smurfids {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MalformedHeader : Error {
    using Error::Error;
};

// IPv6 and anything else that is not IPv4
struct UnsupportedProtocol : MalformedHeader {
    using MalformedHeader::MalformedHeader;
};

struct BadCaptureFile : Error {
    using Error::Error;
};

struct IoFailure : Error {
    using Error::Error;
};

struct BadRecord : Error {
    using Error::Error;
};

struct DegenerateData : Error {
    using Error::Error;
};

struct BadFoldCount : Error {
    using Error::Error;
};

struct LengthMismatch : Error {
    using Error::Error;
};

struct EmptyInput : Error {
    using Error::Error;
};

}  // namespace smurfids
