// include/sigbak/error.h

// Copyright 2025  The sigbak authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SIGBAK_ERROR_H_
#define SIGBAK_ERROR_H_

#include <stdexcept>
#include <string>

namespace sigbak {

// Base of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing, unreadable or unwritable file.
class FileError : public Error {
 public:
  using Error::Error;
};

// Structurally invalid data: bad RIFF header, bad manifest line,
// corrupt checkpoint container.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Structurally valid container holding an encoding or variant we do not
// handle (e.g. a compressed WAV codec).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// An argument violates an operation's preconditions (empty clip,
// out-of-range RT60, constant correlation input, ...).
class InvalidArgError : public Error {
 public:
  using Error::Error;
};

}  // namespace sigbak

#endif  // SIGBAK_ERROR_H_
