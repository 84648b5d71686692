/*
 * Copyright 2026 The rankperturb Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace rankperturb {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameters (CLI exit status 1).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Unreadable or malformed input data (CLI exit status 2).
class DataError : public Error {
public:
    using Error::Error;
};

/// Numerically undefined input, such as a zero-norm vector.
class DomainError : public Error {
public:
    using Error::Error;
};

/// No query token is in the embedding vocabulary; the query has no center.
class NoCenterError : public Error {
public:
    using Error::Error;
};

/// A strategy found no eligible position to perturb.
class NoCandidateError : public Error {
public:
    using Error::Error;
};

/// The ranker cannot provide token gradients.
class CapabilityError : public Error {
public:
    using Error::Error;
};

}  // namespace rankperturb
