#pragma once

#include <stdexcept>
#include <string>

namespace thetapow {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed decimal / rational / schedule text.
class ParseError : public Error {
public:
    using Error::Error;
};

// Precondition of an operation violated (x not positive, theta out of range, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Enumeration, sequence or precision cap exceeded.
class CapExceeded : public Error {
public:
    using Error::Error;
};

// A comparison could not be decided before the precision cap.
class Undecided : public Error {
public:
    using Error::Error;
};

} // namespace thetapow
