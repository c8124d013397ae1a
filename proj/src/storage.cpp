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

#include "obsh/storage.hpp"

#include <algorithm>
#include <cstring>
#include <ostream>
#include <unordered_set>

#include "obsh/errors.hpp"

namespace obsh {

std::vector<std::pair<ArrayId, std::uint64_t>> MoveTranscript::downloads() const
{
    std::vector<std::pair<ArrayId, std::uint64_t>> out;
    for (const auto& e : events_)
        if (e.kind == EventKind::kDownload)
            out.emplace_back(e.array, e.index);
    return out;
}

std::vector<std::pair<ArrayId, std::uint64_t>> MoveTranscript::uploads() const
{
    std::vector<std::pair<ArrayId, std::uint64_t>> out;
    for (const auto& e : events_)
        if (e.kind == EventKind::kUpload)
            out.emplace_back(e.array, e.index);
    return out;
}

std::uint64_t MoveTranscript::bandwidth() const
{
    std::uint64_t total = 0;
    for (const auto& e : events_)
        total += e.kind == EventKind::kServerEval ? e.coefficient_blocks : 1;
    return total;
}

ServerStore::ServerStore(std::size_t ct_size, std::size_t capacity_slots, TranscriptMode mode)
    : ct_size_(ct_size), capacity_(capacity_slots), mode_(mode)
{}

ArrayId ServerStore::create_array(std::string name, std::size_t slots, SlotKind kind, std::size_t lanes)
{
    if (slots > capacity_ - live_slots_)
        throw ProtocolViolation("server storage exhausted allocating " + name + " (" + std::to_string(slots) +
                                " slots, " + std::to_string(live_slots_) + " of " + std::to_string(capacity_) +
                                " in use)");
    const std::size_t slot_bytes = kind == SlotKind::kLanes ? lanes * sizeof(FieldElement) : ct_size_;
    Array a{std::move(name), kind, slots, slot_bytes, {}, {}, true};
    a.data.resize(slots * slot_bytes);
    a.filled.assign(slots, 0);
    arrays_.push_back(std::move(a));
    live_slots_ += slots;
    peak_slots_ = std::max(peak_slots_, live_slots_);
    return static_cast<ArrayId>(arrays_.size() - 1);
}

void ServerStore::release_array(ArrayId id)
{
    if (id >= arrays_.size() || !arrays_[id].live)
        throw ProtocolViolation("release of unknown array " + std::to_string(id));
    Array& a = arrays_[id];
    live_slots_ -= a.slots;
    a.live = false;
    a.data = {};
    a.filled = {};
}

std::size_t ServerStore::array_size(ArrayId id) const { return arrays_.at(id).slots; }
const std::string& ServerStore::array_name(ArrayId id) const { return arrays_.at(id).name; }
SlotKind ServerStore::array_kind(ArrayId id) const { return arrays_.at(id).kind; }

ServerStore::Array& ServerStore::checked(ArrayId id, std::size_t idx, const char* op)
{
    return const_cast<Array&>(std::as_const(*this).checked(id, idx, op));
}

const ServerStore::Array& ServerStore::checked(ArrayId id, std::size_t idx, const char* op) const
{
    if (id >= arrays_.size() || !arrays_[id].live)
        throw ProtocolViolation(std::string(op) + " on unknown array " + std::to_string(id));
    const Array& a = arrays_[id];
    if (idx >= a.slots)
        throw ProtocolViolation(std::string(op) + " " + a.name + "[" + std::to_string(idx) + "] out of range (size " +
                                std::to_string(a.slots) + ")");
    return a;
}

void ServerStore::record(EventKind kind, ArrayId id, std::uint64_t idx)
{
    if (mode_ == TranscriptMode::kMemory)
        transcript_.events_.push_back(MoveEvent{kind, id, idx, 0, 0});
    if (stream_ != nullptr)
        *stream_ << (kind == EventKind::kDownload ? "D " : "U ") << arrays_[id].name << ' ' << idx << '\n';
}

void ServerStore::note_hold()
{
    metrics_.client_high_water = std::max(metrics_.client_high_water, held_);
}

void ServerStore::sample_held()
{
    const auto moves = static_cast<double>(metrics_.downloads + metrics_.uploads);
    metrics_.client_mean_held += (static_cast<double>(held_) - metrics_.client_mean_held) / moves;
}

std::span<const std::uint8_t> ServerStore::download(ArrayId id, std::size_t idx)
{
    const Array& a = checked(id, idx, "download");
    if (a.kind != SlotKind::kCiphertext)
        throw ProtocolViolation("download from lane array " + a.name);
    if (!a.filled[idx])
        throw ProtocolViolation("download of empty slot " + a.name + "[" + std::to_string(idx) + "]");
    record(EventKind::kDownload, id, idx);
    ++metrics_.downloads;
    ++metrics_.bandwidth_blocks;
    ++held_;
    note_hold();
    sample_held();
    return std::span(a.data).subspan(idx * a.slot_bytes, a.slot_bytes);
}

void ServerStore::upload(ArrayId id, std::size_t idx, std::span<const std::uint8_t> ct, Origin origin)
{
    Array& a = checked(id, idx, "upload");
    if (a.kind != SlotKind::kCiphertext)
        throw ProtocolViolation("upload into lane array " + a.name);
    if (ct.size() != ct_size_)
        throw ProtocolViolation("upload of " + std::to_string(ct.size()) + "-byte ciphertext, expected " +
                                std::to_string(ct_size_));
    if (origin == Origin::kClient) {
        if (held_ == 0)
            throw ProtocolViolation("upload of a client block while the client holds none");
        --held_;
    }
    std::memcpy(a.data.data() + idx * a.slot_bytes, ct.data(), ct_size_);
    a.filled[idx] = 1;
    record(EventKind::kUpload, id, idx);
    ++metrics_.uploads;
    ++metrics_.bandwidth_blocks;
    sample_held();
}

void ServerStore::server_eval(ArrayId id, std::span<const std::uint64_t> indices, const LanePolynomial& poly)
{
    if (id >= arrays_.size() || !arrays_[id].live)
        throw ProtocolViolation("server_eval on unknown array " + std::to_string(id));
    Array& a = arrays_[id];
    if (a.kind != SlotKind::kLanes)
        throw ProtocolViolation("server_eval into ciphertext array " + a.name);
    if (poly.lane_count() * sizeof(FieldElement) != a.slot_bytes)
        throw ProtocolViolation("server_eval lane count does not match " + a.name);
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(indices.size());
    for (auto x : indices) {
        if (x >= a.slots)
            throw ProtocolViolation("server_eval index " + std::to_string(x) + " out of range for " + a.name);
        if (!seen.insert(x).second)
            throw ProtocolViolation("server_eval duplicate index " + std::to_string(x));
    }

    const std::size_t lanes = poly.lane_count();
    std::vector<FieldElement> value(lanes);
    for (auto x : indices) {
        poly_eval_into(poly, FieldElement{x}, value);
        std::memcpy(a.data.data() + x * a.slot_bytes, value.data(), a.slot_bytes);
        a.filled[x] = 1;
    }

    const std::uint64_t k = poly.coefficient_blocks();
    if (mode_ == TranscriptMode::kMemory) {
        const auto offset = transcript_.eval_points_.size();
        transcript_.eval_points_.insert(transcript_.eval_points_.end(), indices.begin(), indices.end());
        transcript_.events_.push_back(MoveEvent{EventKind::kServerEval, id, offset, indices.size(), k});
    }
    if (stream_ != nullptr) {
        *stream_ << "E " << a.name << ' ' << k;
        for (auto x : indices)
            *stream_ << ' ' << x;
        *stream_ << '\n';
    }
    metrics_.eval_coefficient_blocks += k;
    metrics_.bandwidth_blocks += k;
}

void ServerStore::install(ArrayId id, std::size_t idx, std::span<const std::uint8_t> ct)
{
    Array& a = checked(id, idx, "install");
    if (ct.size() != a.slot_bytes)
        throw ProtocolViolation("install of wrongly sized slot into " + a.name);
    std::memcpy(a.data.data() + idx * a.slot_bytes, ct.data(), a.slot_bytes);
    a.filled[idx] = 1;
}

std::span<const std::uint8_t> ServerStore::peek(ArrayId id, std::size_t idx) const
{
    const Array& a = checked(id, idx, "peek");
    if (!a.filled[idx])
        throw ProtocolViolation("peek of empty slot " + a.name + "[" + std::to_string(idx) + "]");
    return std::span(a.data).subspan(idx * a.slot_bytes, a.slot_bytes);
}

std::span<const FieldElement> ServerStore::peek_lanes(ArrayId id, std::size_t idx) const
{
    const Array& a = checked(id, idx, "peek_lanes");
    if (a.kind != SlotKind::kLanes)
        throw ProtocolViolation("peek_lanes on ciphertext array " + a.name);
    if (!a.filled[idx])
        throw ProtocolViolation("peek of empty slot " + a.name + "[" + std::to_string(idx) + "]");
    const auto* p = reinterpret_cast<const FieldElement*>(a.data.data() + idx * a.slot_bytes);
    return {p, a.slot_bytes / sizeof(FieldElement)};
}

bool ServerStore::occupied(ArrayId id, std::size_t idx) const { return checked(id, idx, "occupied").filled[idx] != 0; }

void ServerStore::discard(std::size_t n)
{
    if (n > held_)
        throw ProtocolViolation("discard of more blocks than the client holds");
    held_ -= n;
}

void ServerStore::adopt(std::size_t n)
{
    held_ += n;
    note_hold();
}

void ServerStore::write_transcript(std::ostream& out) const
{
    for (const auto& e : transcript_.events_) {
        const std::string& name = arrays_[e.array].name;
        switch (e.kind) {
        case EventKind::kDownload:
            out << "D " << name << ' ' << e.index << '\n';
            break;
        case EventKind::kUpload:
            out << "U " << name << ' ' << e.index << '\n';
            break;
        case EventKind::kServerEval:
            out << "E " << name << ' ' << e.coefficient_blocks;
            for (auto x : transcript_.eval_points(e))
                out << ' ' << x;
            out << '\n';
            break;
        }
    }
}

} // namespace obsh
