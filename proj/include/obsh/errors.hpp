/*
 * Copyright 2026 The obsh Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

#include "obsh/metrics.hpp"

namespace obsh {

/// Payload length does not match the configured block size.
class InvalidBlock : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Ciphertext failed authentication or has the wrong shape.
class CorruptCiphertext : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The client asked the server for something the move model forbids
/// (empty slot, out-of-range index, duplicate evaluation points, storage
/// budget exceeded). Always an algorithm bug, never a runtime condition.
class ProtocolViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Operation invoked at the wrong point of an object's lifecycle.
class InvalidState : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A randomized shuffle hit one of its failure events. Carries the metrics
/// accumulated up to the abort so callers can account for the wasted work.
class ShuffleAborted : public std::runtime_error {
public:
    ShuffleAborted(const std::string& reason, Metrics metrics)
        : std::runtime_error(reason), metrics_(metrics)
    {
        metrics_.aborted = true;
    }

    const Metrics& metrics() const noexcept { return metrics_; }

private:
    Metrics metrics_;
};

/// Malformed block file; offset is the byte position where parsing failed.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " at byte offset " + std::to_string(offset)), offset_(offset)
    {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

} // namespace obsh
