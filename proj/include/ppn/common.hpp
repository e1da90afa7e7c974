// Copyright 2026 The PPN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PPN_COMMON_HPP_
#define PPN_COMMON_HPP_

#include <stdexcept>
#include <string>

namespace ppn {

struct RenderError : std::runtime_error {
    explicit RenderError(const std::string& msg) : std::runtime_error("RenderError: " + msg) {}
};
struct AugmentError : std::runtime_error {
    explicit AugmentError(const std::string& msg) : std::runtime_error("AugmentError: " + msg) {}
};
struct EncodeError : std::runtime_error {
    explicit EncodeError(const std::string& msg) : std::runtime_error("EncodeError: " + msg) {}
};
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error("ShapeError: " + msg) {}
};
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("ConfigError: " + msg) {}
};
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error("DataError: " + msg) {}
};
struct ResumeError : std::runtime_error {
    explicit ResumeError(const std::string& msg) : std::runtime_error("ResumeError: " + msg) {}
};
struct IOError : std::runtime_error {
    explicit IOError(const std::string& msg) : std::runtime_error("IOError: " + msg) {}
};
struct DegenerateAxisError : std::runtime_error {
    explicit DegenerateAxisError(const std::string& msg)
        : std::runtime_error("DegenerateAxisError: " + msg) {}
};

}  // namespace ppn

#endif  // PPN_COMMON_HPP_
