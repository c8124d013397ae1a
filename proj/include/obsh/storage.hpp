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
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "obsh/field.hpp"
#include "obsh/metrics.hpp"

namespace obsh {

using ArrayId = std::uint32_t;

enum class EventKind : std::uint8_t { kDownload, kUpload, kServerEval };

/// One server-visible event. For kServerEval, `index` is the offset of the
/// evaluation point list inside MoveTranscript::eval_points and `count` its
/// length; otherwise `index` is the slot and `count` is zero.
struct MoveEvent {
    EventKind kind;
    ArrayId array;
    std::uint64_t index;
    std::uint64_t count;
    std::uint64_t coefficient_blocks;

    bool operator==(const MoveEvent&) const = default;
};

enum class TranscriptMode {
    kOff,
    kMemory,
};

/// Ordered record of server locations touched by the client.
class MoveTranscript {
public:
    std::span<const MoveEvent> events() const { return events_; }
    std::span<const std::uint64_t> eval_points(const MoveEvent& e) const
    {
        return std::span(eval_points_).subspan(e.index, e.count);
    }
    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }

    /// Download sources as (array, slot), in order.
    std::vector<std::pair<ArrayId, std::uint64_t>> downloads() const;
    /// Upload destinations as (array, slot), in order.
    std::vector<std::pair<ArrayId, std::uint64_t>> uploads() const;

    /// Block-unit cost of the recorded events.
    std::uint64_t bandwidth() const;

    bool operator==(const MoveTranscript&) const = default;

private:
    friend class ServerStore;
    std::vector<MoveEvent> events_;
    std::vector<std::uint64_t> eval_points_;
};

enum class SlotKind : std::uint8_t {
    kCiphertext,
    /// Raw field lanes written by server_eval.
    kLanes,
};

/// How an upload affects the client ledger.
enum class Origin : std::uint8_t {
    /// The uploaded ciphertext re-encrypts a block the client was holding.
    kClient,
    /// A dummy encrypted on the spot; nothing leaves client memory.
    kFresh,
};

/// Simulated server plus client-side accounting. Every algorithm reaches the
/// server only through download, upload and server_eval.
class ServerStore {
public:
    static constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

    /// ct_size: byte length of every ciphertext slot. capacity_slots bounds
    /// the total number of live slots across arrays.
    explicit ServerStore(std::size_t ct_size, std::size_t capacity_slots = kUnlimited,
                         TranscriptMode mode = TranscriptMode::kMemory);

    ServerStore(const ServerStore&) = delete;
    ServerStore& operator=(const ServerStore&) = delete;
    ServerStore(ServerStore&&) = default;
    ServerStore& operator=(ServerStore&&) = default;

    std::size_t ciphertext_size() const { return ct_size_; }

    /// Allocates a new array of empty slots. Throws ProtocolViolation if the
    /// capacity would be exceeded.
    ArrayId create_array(std::string name, std::size_t slots, SlotKind kind = SlotKind::kCiphertext,
                         std::size_t lanes = 0);
    /// Frees an array's slots. Its id is never reused.
    void release_array(ArrayId id);

    std::size_t array_size(ArrayId id) const;
    const std::string& array_name(ArrayId id) const;
    SlotKind array_kind(ArrayId id) const;
    std::size_t live_slots() const { return live_slots_; }
    std::size_t peak_slots() const { return peak_slots_; }
    std::size_t capacity_slots() const { return capacity_; }

    /// Counted download. The returned view stays valid until the next
    /// mutation of this store. Throws ProtocolViolation on an empty slot.
    std::span<const std::uint8_t> download(ArrayId id, std::size_t idx);

    /// Counted upload overwriting the slot.
    void upload(ArrayId id, std::size_t idx, std::span<const std::uint8_t> ct, Origin origin = Origin::kClient);

    /// Server-side evaluation of poly at each index, writing raw lanes into a
    /// kLanes array. Costs poly.coefficient_blocks() block units.
    void server_eval(ArrayId id, std::span<const std::uint64_t> indices, const LanePolynomial& poly);

    /// Uncounted setup write (the initial placement is free).
    void install(ArrayId id, std::size_t idx, std::span<const std::uint8_t> ct);
    /// Uncounted inspection, for verification only.
    std::span<const std::uint8_t> peek(ArrayId id, std::size_t idx) const;
    /// Uncounted inspection of a kLanes slot.
    std::span<const FieldElement> peek_lanes(ArrayId id, std::size_t idx) const;
    bool occupied(ArrayId id, std::size_t idx) const;

    /// The client dropped n held blocks (dummies after decryption).
    void discard(std::size_t n = 1);
    /// The client now holds n more blocks obtained without a download
    /// (blocks carried over from an earlier phase).
    void adopt(std::size_t n);
    std::uint64_t client_held() const { return held_; }

    /// Marks the end of one batched exchange.
    void flush() { ++metrics_.roundtrips; }

    const Metrics& metrics() const { return metrics_; }
    Metrics& mutable_metrics() { return metrics_; }
    Metrics metrics_snapshot() const { return metrics_; }

    const MoveTranscript& transcript() const { return transcript_; }
    TranscriptMode transcript_mode() const { return mode_; }

    /// Streams every subsequent event to out in the text format
    /// `D <array> <idx>`, `U <array> <idx>`, `E <array> <k> <idx...>`.
    void stream_to(std::ostream* out) { stream_ = out; }

    /// Writes a recorded transcript in the same text format.
    void write_transcript(std::ostream& out) const;

private:
    struct Array {
        std::string name;
        SlotKind kind;
        std::size_t slots;
        std::size_t slot_bytes;
        std::vector<std::uint8_t> data;
        std::vector<std::uint8_t> filled;
        bool live;
    };

    Array& checked(ArrayId id, std::size_t idx, const char* op);
    const Array& checked(ArrayId id, std::size_t idx, const char* op) const;
    void record(EventKind kind, ArrayId id, std::uint64_t idx);
    void note_hold();
    void sample_held();

    std::size_t ct_size_;
    std::size_t capacity_;
    std::size_t live_slots_ = 0;
    std::size_t peak_slots_ = 0;
    TranscriptMode mode_;
    std::vector<Array> arrays_;
    MoveTranscript transcript_;
    std::ostream* stream_ = nullptr;
    Metrics metrics_;
    std::uint64_t held_ = 0;
};

} // namespace obsh
