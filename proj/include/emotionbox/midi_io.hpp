#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ebox::midi {

inline constexpr int kMinPitch = 21;  // A0
inline constexpr int kMaxPitch = 108; // C8

struct Note {
    int pitch = 60;
    double onset = 0.0;   // seconds
    double offset = 0.0;  // seconds, > onset
    int velocity = 64;    // 1..127

    bool operator==(const Note&) const = default;
};

// Notes sorted by (onset, pitch). Times are in seconds; ticks_per_quarter is
// only carried so exports can reuse the source resolution.
struct NoteList {
    std::vector<Note> notes;
    int ticks_per_quarter = 480;
    std::string source_name;
};

void sort_notes(std::vector<Note>& notes);

// Checks the NoteList invariants (range, ordering, offset > onset).
bool is_valid(const NoteList& list);

// Parses a Standard MIDI File (format 0 or 1). All tracks and channels are
// merged into a single piano part. Tempo changes are honored; every other
// meta and controller event is ignored. A note-on for a pitch that is still
// sounding closes the earlier note at the re-strike time. Notes left open
// at the end of their track are closed there.
//
// Throws MalformedFile or UnsupportedFormat.
NoteList parse_midi(std::span<const std::uint8_t> bytes);

// Format-0, single track, 480 ticks per quarter, 120 BPM (no tempo event is
// written, the SMF default applies). Channel 0.
std::vector<std::uint8_t> write_midi(const NoteList& notes);

NoteList read_midi_file(const std::filesystem::path& path);
void write_midi_file(const std::filesystem::path& path, const NoteList& notes);

}  // namespace ebox::midi
