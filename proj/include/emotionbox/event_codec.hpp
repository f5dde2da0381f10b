#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "emotionbox/midi_io.hpp"

namespace ebox::codec {

inline constexpr int kNumPitches = 88;
inline constexpr int kNumTimeShifts = 32;
inline constexpr int kNumVelocityBins = 32;
inline constexpr int kVocabSize = 2 * kNumPitches + kNumTimeShifts + kNumVelocityBins;  // 240

inline constexpr int kNoteOnBase = 0;
inline constexpr int kNoteOffBase = kNoteOnBase + kNumPitches;        // 88
inline constexpr int kTimeShiftBase = kNoteOffBase + kNumPitches;     // 176
inline constexpr int kVelocityBase = kTimeShiftBase + kNumTimeShifts; // 208

// 32 shifts span one second.
inline constexpr double kTimeQuantum = 1.0 / kNumTimeShifts;

// Bin used by the decoder until the first VELOCITY event.
inline constexpr int kDefaultVelocityBin = 16;

enum class EventKind { NoteOn, NoteOff, TimeShift, Velocity };

// value: pitch 21..108 for note events, quanta 1..32 for TimeShift,
// bin 0..31 for Velocity.
struct PerformanceEvent {
    EventKind kind = EventKind::NoteOn;
    int value = midi::kMinPitch;

    bool operator==(const PerformanceEvent&) const = default;

    static PerformanceEvent note_on(int pitch) { return {EventKind::NoteOn, pitch}; }
    static PerformanceEvent note_off(int pitch) { return {EventKind::NoteOff, pitch}; }
    static PerformanceEvent time_shift(int quanta) { return {EventKind::TimeShift, quanta}; }
    static PerformanceEvent velocity(int bin) { return {EventKind::Velocity, bin}; }
};

using EventSequence = std::vector<PerformanceEvent>;

bool is_valid(const PerformanceEvent& e);

// Throws IndexOutOfRange for an event whose value is outside its kind's range.
int event_index(const PerformanceEvent& e);
// Throws IndexOutOfRange outside [0, 240).
PerformanceEvent index_to_event(int index);

std::vector<int> to_indices(const EventSequence& events);
EventSequence from_indices(const std::vector<int>& indices);

inline int velocity_bin(int midi_velocity) { return midi_velocity / 4; }
int bin_velocity(int bin);

// Notes with onset and offset on the same quantum are held for one quantum
// so every NOTE_ON is followed by its NOTE_OFF at a later clock.
EventSequence encode(const midi::NoteList& notes);

// Tolerant: orphan NOTE_OFFs are ignored, a NOTE_ON for a sounding pitch
// closes the earlier note, and notes still open at the end are closed one
// quantum after the final clock.
midi::NoteList decode(const EventSequence& events);

// Clock (seconds) in effect when each event is applied, i.e. before any
// TIME_SHIFT at that position advances it.
std::vector<double> event_times(const EventSequence& events);

// One event per line: "ON 60", "OFF 60", "SHIFT 16", "VEL 16".
std::string to_text(const EventSequence& events);
// Blank lines and lines starting with '#' are skipped. Throws MalformedFile
// naming the offending line.
EventSequence from_text(std::string_view text);

}  // namespace ebox::codec
