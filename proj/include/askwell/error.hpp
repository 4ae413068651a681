#pragma once

#include <stdexcept>
#include <string>

namespace askwell {

// Base of every error the library throws on contract violations or bad input.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace askwell
