#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scatmir/common.hpp"

namespace scatmir {

struct NoteEvent {
    double onset_seconds = 0.0;
    double duration_seconds = 0.0;
    int pitch = 60;        // MIDI note number
    int velocity = 64;     // 1..127
    std::string instrument;

    void validate() const {
        if (onset_seconds < 0.0) throw InvalidInput("note: negative onset");
        if (!(duration_seconds > 0.0)) throw InvalidInput("note: non-positive duration");
        if (pitch < 0 || pitch > 127) throw InvalidInput("note: pitch out of range");
        if (velocity < 0 || velocity > 127) throw InvalidInput("note: velocity out of range");
    }
};

struct Score {
    std::vector<NoteEvent> events;  // sorted by onset
    double total_duration = 0.0;

    void sort_events() {
        std::stable_sort(events.begin(), events.end(),
                         [](const NoteEvent& a, const NoteEvent& b) {
                             return a.onset_seconds < b.onset_seconds;
                         });
    }

    std::vector<double> onset_times() const {
        std::vector<double> t;
        t.reserve(events.size());
        for (const auto& e : events) t.push_back(e.onset_seconds);
        return t;
    }
};

inline nlohmann::json to_json(const NoteEvent& e) {
    return {{"onset_seconds", e.onset_seconds},
            {"duration_seconds", e.duration_seconds},
            {"pitch", e.pitch},
            {"velocity", e.velocity},
            {"instrument", e.instrument}};
}

inline NoteEvent note_from_json(const nlohmann::json& j) {
    NoteEvent e;
    e.onset_seconds = j.at("onset_seconds").get<double>();
    e.duration_seconds = j.at("duration_seconds").get<double>();
    e.pitch = j.at("pitch").get<int>();
    e.velocity = j.at("velocity").get<int>();
    if (j.contains("instrument")) e.instrument = j.at("instrument").get<std::string>();
    return e;
}

inline nlohmann::json to_json(const Score& s) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : s.events) events.push_back(to_json(e));
    return {{"events", events}, {"total_duration", s.total_duration}};
}

inline Score score_from_json(const nlohmann::json& j) {
    Score s;
    for (const auto& e : j.at("events")) s.events.push_back(note_from_json(e));
    s.total_duration = j.contains("total_duration")
                           ? j.at("total_duration").get<double>()
                           : 0.0;
    s.sort_events();
    if (s.total_duration == 0.0)
        for (const auto& e : s.events)
            s.total_duration =
                std::max(s.total_duration, e.onset_seconds + e.duration_seconds);
    return s;
}

inline Score load_score_json(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("score: cannot open " + path);
    return score_from_json(nlohmann::json::parse(is));
}

inline void save_score_json(const Score& s, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("score: cannot write " + path);
    os << to_json(s).dump(2) << "\n";
}

}  // namespace scatmir
