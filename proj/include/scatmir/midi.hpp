#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "scatmir/common.hpp"
#include "scatmir/score.hpp"

namespace scatmir {

namespace detail {

struct MidiCursor {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;

    std::uint8_t u8() {
        if (pos >= size) throw ParseError("midi: truncated at byte " + std::to_string(pos));
        return data[pos++];
    }
    std::uint16_t u16() { return static_cast<std::uint16_t>((u8() << 8) | u8()); }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | u8();
        return v;
    }
    std::uint32_t vlq() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            const std::uint8_t b = u8();
            v = (v << 7) | (b & 0x7f);
            if (!(b & 0x80)) return v;
        }
        throw ParseError("midi: overlong variable-length quantity at byte " +
                         std::to_string(pos));
    }
    void skip(std::size_t n) {
        if (pos + n > size)
            throw ParseError("midi: truncated chunk at byte " + std::to_string(pos));
        pos += n;
    }
    void expect_tag(const char* tag) {
        if (pos + 4 > size || std::memcmp(data + pos, tag, 4) != 0)
            throw ParseError(std::string("midi: expected '") + tag + "' at byte " +
                             std::to_string(pos));
        pos += 4;
    }
};

struct RawNoteOn {
    std::uint64_t tick;
    int velocity;
};

struct RawEvent {
    std::uint64_t tick;
    bool on;            // note-on with velocity > 0
    int channel;
    int pitch;
    int velocity;
};

}  // namespace detail

/// Standard MIDI File (type 0 or 1) to a Score. Note-on/note-off pairs are
/// resolved FIFO per (channel, pitch); note-on with velocity 0 counts as a
/// note-off; running status is honored; tempo changes from any track apply
/// globally. Unmatched note-ons are dropped and counted in *dropped_notes.
inline Score parse_midi(const std::vector<std::uint8_t>& bytes,
                        std::size_t* dropped_notes = nullptr) {
    detail::MidiCursor cur{bytes.data(), bytes.size(), 0};
    cur.expect_tag("MThd");
    const std::uint32_t header_len = cur.u32();
    if (header_len < 6) throw ParseError("midi: bad header length");
    const std::uint16_t format = cur.u16();
    const std::uint16_t n_tracks = cur.u16();
    const std::uint16_t division = cur.u16();
    cur.skip(header_len - 6);
    if (format > 1) throw ParseError("midi: only SMF type 0 and 1 supported");
    if (division & 0x8000) throw ParseError("midi: SMPTE time division not supported");
    if (division == 0) throw ParseError("midi: zero ticks per quarter");

    std::vector<detail::RawEvent> notes;
    std::map<std::uint64_t, std::uint32_t> tempo_map;  // tick -> us per quarter

    for (std::uint16_t t = 0; t < n_tracks; ++t) {
        cur.expect_tag("MTrk");
        const std::uint32_t track_len = cur.u32();
        const std::size_t track_end = cur.pos + track_len;
        if (track_end > cur.size)
            throw ParseError("midi: track overruns file at byte " + std::to_string(cur.pos));

        std::uint64_t tick = 0;
        std::uint8_t running = 0;
        while (cur.pos < track_end) {
            tick += cur.vlq();
            std::uint8_t status = cur.u8();
            if (status < 0x80) {
                if (running == 0)
                    throw ParseError("midi: data byte without status at byte " +
                                     std::to_string(cur.pos - 1));
                --cur.pos;  // first data byte of a running-status event
                status = running;
            }
            if (status == 0xff) {
                const std::uint8_t type = cur.u8();
                const std::uint32_t len = cur.vlq();
                if (type == 0x51 && len == 3) {
                    std::uint32_t us = 0;
                    for (int i = 0; i < 3; ++i) us = (us << 8) | cur.u8();
                    tempo_map[tick] = us;
                } else {
                    cur.skip(len);
                }
                running = 0;
            } else if (status == 0xf0 || status == 0xf7) {
                cur.skip(cur.vlq());
                running = 0;
            } else {
                running = status;
                const int kind = status >> 4;
                const int channel = status & 0x0f;
                const std::uint8_t d1 = cur.u8();
                if (kind == 0xc || kind == 0xd) continue;  // one data byte
                const std::uint8_t d2 = cur.u8();
                if (kind == 0x9)
                    notes.push_back({tick, d2 > 0, channel, d1, d2});
                else if (kind == 0x8)
                    notes.push_back({tick, false, channel, d1, d2});
            }
        }
        cur.pos = track_end;
    }

    // piecewise-linear tick -> seconds using the tempo map (500000 us default)
    std::vector<std::pair<std::uint64_t, std::uint32_t>> tempos(tempo_map.begin(),
                                                                tempo_map.end());
    if (tempos.empty() || tempos.front().first != 0)
        tempos.insert(tempos.begin(), {0, 500000});
    auto tick_seconds = [&](std::uint64_t tick) {
        double seconds = 0.0;
        for (std::size_t i = 0; i < tempos.size(); ++i) {
            const std::uint64_t seg_start = tempos[i].first;
            if (tick <= seg_start) break;
            const std::uint64_t seg_end =
                i + 1 < tempos.size() ? std::min<std::uint64_t>(tempos[i + 1].first, tick)
                                      : tick;
            seconds += static_cast<double>(seg_end - seg_start) *
                       static_cast<double>(tempos[i].second) /
                       (1e6 * static_cast<double>(division));
        }
        return seconds;
    };

    std::stable_sort(notes.begin(), notes.end(),
                     [](const detail::RawEvent& a, const detail::RawEvent& b) {
                         return a.tick < b.tick;
                     });

    Score score;
    std::size_t dropped = 0;
    std::map<std::pair<int, int>, std::deque<detail::RawNoteOn>> open;
    for (const auto& ev : notes) {
        const auto key = std::make_pair(ev.channel, ev.pitch);
        if (ev.on) {
            open[key].push_back({ev.tick, ev.velocity});
        } else {
            auto it = open.find(key);
            if (it == open.end() || it->second.empty()) continue;  // orphan note-off
            const auto on = it->second.front();
            it->second.pop_front();
            NoteEvent note;
            note.onset_seconds = tick_seconds(on.tick);
            note.duration_seconds = std::max(1e-9, tick_seconds(ev.tick) - note.onset_seconds);
            note.pitch = ev.pitch;
            note.velocity = on.velocity;
            score.events.push_back(note);
        }
    }
    for (const auto& [key, stack] : open) dropped += stack.size();

    score.sort_events();
    for (const auto& e : score.events)
        score.total_duration =
            std::max(score.total_duration, e.onset_seconds + e.duration_seconds);
    if (dropped_notes) *dropped_notes = dropped;
    return score;
}

inline Score load_midi_file(const std::string& path, std::size_t* dropped_notes = nullptr) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("midi: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                    std::istreambuf_iterator<char>());
    return parse_midi(bytes, dropped_notes);
}

}  // namespace scatmir
