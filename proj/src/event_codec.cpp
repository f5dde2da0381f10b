#include "emotionbox/event_codec.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>
#include <tuple>

#include "emotionbox/errors.hpp"

namespace ebox::codec {

bool is_valid(const PerformanceEvent& e) {
    switch (e.kind) {
        case EventKind::NoteOn:
        case EventKind::NoteOff:
            return e.value >= midi::kMinPitch && e.value <= midi::kMaxPitch;
        case EventKind::TimeShift:
            return e.value >= 1 && e.value <= kNumTimeShifts;
        case EventKind::Velocity:
            return e.value >= 0 && e.value < kNumVelocityBins;
    }
    return false;
}

int event_index(const PerformanceEvent& e) {
    if (!is_valid(e)) {
        throw IndexOutOfRange("event value " + std::to_string(e.value) + " out of range for its kind");
    }
    switch (e.kind) {
        case EventKind::NoteOn: return kNoteOnBase + e.value - midi::kMinPitch;
        case EventKind::NoteOff: return kNoteOffBase + e.value - midi::kMinPitch;
        case EventKind::TimeShift: return kTimeShiftBase + e.value - 1;
        case EventKind::Velocity: return kVelocityBase + e.value;
    }
    return -1;
}

PerformanceEvent index_to_event(int index) {
    if (index < 0 || index >= kVocabSize) {
        throw IndexOutOfRange("event index " + std::to_string(index) + " outside [0, 240)");
    }
    if (index < kNoteOffBase) return PerformanceEvent::note_on(index - kNoteOnBase + midi::kMinPitch);
    if (index < kTimeShiftBase) return PerformanceEvent::note_off(index - kNoteOffBase + midi::kMinPitch);
    if (index < kVelocityBase) return PerformanceEvent::time_shift(index - kTimeShiftBase + 1);
    return PerformanceEvent::velocity(index - kVelocityBase);
}

std::vector<int> to_indices(const EventSequence& events) {
    std::vector<int> out;
    out.reserve(events.size());
    for (const auto& e : events) out.push_back(event_index(e));
    return out;
}

EventSequence from_indices(const std::vector<int>& indices) {
    EventSequence out;
    out.reserve(indices.size());
    for (int i : indices) out.push_back(index_to_event(i));
    return out;
}

int bin_velocity(int bin) { return std::clamp(4 * bin + 2, 1, 127); }

EventSequence encode(const midi::NoteList& list) {
    struct Mark {
        long long quanta;
        bool on;
        int pitch;
        int velocity;
    };
    std::vector<Mark> marks;
    marks.reserve(list.notes.size() * 2);
    for (const auto& n : list.notes) {
        // Snap against the absolute timeline so rounding errors never add up.
        const long long on = std::llround(n.onset / kTimeQuantum);
        const long long off = std::max(std::llround(n.offset / kTimeQuantum), on + 1);
        marks.push_back({on, true, n.pitch, n.velocity});
        marks.push_back({off, false, n.pitch, 0});
    }
    std::stable_sort(marks.begin(), marks.end(), [](const Mark& a, const Mark& b) {
        return std::tie(a.quanta, a.on, a.pitch) < std::tie(b.quanta, b.on, b.pitch);
    });

    EventSequence out;
    long long clock = 0;
    std::optional<int> active_bin;
    for (const auto& m : marks) {
        long long gap = m.quanta - clock;
        while (gap >= kNumTimeShifts) {
            out.push_back(PerformanceEvent::time_shift(kNumTimeShifts));
            gap -= kNumTimeShifts;
        }
        if (gap > 0) out.push_back(PerformanceEvent::time_shift(static_cast<int>(gap)));
        clock = std::max(clock, m.quanta);

        if (m.on) {
            const int bin = velocity_bin(m.velocity);
            if (active_bin != bin) {
                out.push_back(PerformanceEvent::velocity(bin));
                active_bin = bin;
            }
            out.push_back(PerformanceEvent::note_on(m.pitch));
        } else {
            out.push_back(PerformanceEvent::note_off(m.pitch));
        }
    }
    return out;
}

midi::NoteList decode(const EventSequence& events) {
    struct Open {
        long long quanta;
        int velocity;
    };
    std::array<std::optional<Open>, 128> open{};
    std::vector<midi::Note> notes;
    long long clock = 0;
    int bin = kDefaultVelocityBin;

    auto close = [&](int pitch, long long at) {
        auto& o = open[static_cast<std::size_t>(pitch)];
        if (o && at > o->quanta) {
            notes.push_back({pitch, static_cast<double>(o->quanta) * kTimeQuantum,
                             static_cast<double>(at) * kTimeQuantum, o->velocity});
        }
        o.reset();
    };

    for (const auto& e : events) {
        if (!is_valid(e)) continue;
        switch (e.kind) {
            case EventKind::NoteOn:
                close(e.value, clock);
                open[static_cast<std::size_t>(e.value)] = Open{clock, bin_velocity(bin)};
                break;
            case EventKind::NoteOff:
                close(e.value, clock);
                break;
            case EventKind::TimeShift:
                clock += e.value;
                break;
            case EventKind::Velocity:
                bin = e.value;
                break;
        }
    }
    for (int p = 0; p < 128; ++p) {
        if (open[static_cast<std::size_t>(p)]) close(p, clock + 1);
    }

    midi::NoteList out;
    midi::sort_notes(notes);
    out.notes = std::move(notes);
    return out;
}

std::vector<double> event_times(const EventSequence& events) {
    std::vector<double> times;
    times.reserve(events.size());
    long long clock = 0;
    for (const auto& e : events) {
        times.push_back(static_cast<double>(clock) * kTimeQuantum);
        if (e.kind == EventKind::TimeShift && is_valid(e)) clock += e.value;
    }
    return times;
}

std::string to_text(const EventSequence& events) {
    std::string out;
    out.reserve(events.size() * 8);
    for (const auto& e : events) {
        switch (e.kind) {
            case EventKind::NoteOn: out += "ON "; break;
            case EventKind::NoteOff: out += "OFF "; break;
            case EventKind::TimeShift: out += "SHIFT "; break;
            case EventKind::Velocity: out += "VEL "; break;
        }
        out += std::to_string(e.value);
        out += '\n';
    }
    return out;
}

EventSequence from_text(std::string_view text) {
    EventSequence out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
        while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
        if (line.empty() || line.front() == '#') continue;

        auto fail = [&] { return MalformedFile("line " + std::to_string(line_no) + ": bad event '" + std::string(line) + "'"); };

        const auto sp = line.find(' ');
        if (sp == std::string_view::npos) throw fail();
        const auto name = line.substr(0, sp);
        auto num = line.substr(sp + 1);
        while (!num.empty() && num.front() == ' ') num.remove_prefix(1);
        int value = 0;
        auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
        if (ec != std::errc{} || ptr != num.data() + num.size()) throw fail();

        PerformanceEvent e;
        if (name == "ON") e = PerformanceEvent::note_on(value);
        else if (name == "OFF") e = PerformanceEvent::note_off(value);
        else if (name == "SHIFT") e = PerformanceEvent::time_shift(value);
        else if (name == "VEL") e = PerformanceEvent::velocity(value);
        else throw fail();
        if (!is_valid(e)) throw fail();
        out.push_back(e);
    }
    return out;
}

}  // namespace ebox::codec
