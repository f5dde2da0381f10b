#include "emotionbox/midi_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <optional>
#include <string_view>
#include <tuple>

#include "emotionbox/errors.hpp"
#include "emotionbox/file_util.hpp"

namespace ebox::midi {

void sort_notes(std::vector<Note>& notes) {
    std::stable_sort(notes.begin(), notes.end(), [](const Note& a, const Note& b) {
        return std::tie(a.onset, a.pitch) < std::tie(b.onset, b.pitch);
    });
}

bool is_valid(const NoteList& list) {
    for (std::size_t i = 0; i < list.notes.size(); ++i) {
        const Note& n = list.notes[i];
        if (n.pitch < kMinPitch || n.pitch > kMaxPitch) return false;
        if (n.velocity < 1 || n.velocity > 127) return false;
        if (!(n.onset >= 0.0) || !(n.offset > n.onset)) return false;
        if (i > 0) {
            const Note& p = list.notes[i - 1];
            if (std::tie(n.onset, n.pitch) < std::tie(p.onset, p.pitch)) return false;
        }
    }
    return true;
}

namespace {

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool at_end() const { return pos_ >= data_.size(); }

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    std::uint8_t peek() const {
        if (at_end()) throw MalformedFile("unexpected end of data");
        return data_[pos_];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = (std::uint32_t{data_[pos_]} << 24) | (std::uint32_t{data_[pos_ + 1]} << 16) |
                          (std::uint32_t{data_[pos_ + 2]} << 8) | std::uint32_t{data_[pos_ + 3]};
        pos_ += 4;
        return v;
    }
    std::string_view tag() {
        need(4);
        std::string_view s(reinterpret_cast<const char*>(data_.data() + pos_), 4);
        pos_ += 4;
        return s;
    }
    // Variable-length quantity, at most four bytes.
    std::uint32_t vlq() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            if (at_end()) throw MalformedFile("truncated variable-length quantity");
            std::uint8_t b = data_[pos_++];
            v = (v << 7) | (b & 0x7F);
            if ((b & 0x80) == 0) return v;
        }
        throw MalformedFile("variable-length quantity longer than four bytes");
    }
    void skip(std::size_t n) {
        need(n);
        pos_ += n;
    }
    std::span<const std::uint8_t> bytes(std::size_t n) {
        need(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n) const {
        if (remaining() < n) throw MalformedFile("unexpected end of data");
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

struct RawNoteEvent {
    std::uint64_t tick;
    bool on;
    int track;
    std::size_t order;
    int pitch;
    int velocity;
};

struct TempoEvent {
    std::uint64_t tick;
    std::size_t order;
    std::uint32_t us_per_quarter;
};

struct TrackScan {
    std::vector<RawNoteEvent> notes;
    std::vector<TempoEvent> tempos;
    std::vector<std::uint64_t> track_end;
};

void scan_track(std::span<const std::uint8_t> chunk, int track, TrackScan& out) {
    Reader r(chunk);
    std::uint64_t tick = 0;
    std::uint8_t running = 0;
    std::size_t order = 0;
    while (!r.at_end()) {
        tick += r.vlq();
        std::uint8_t status = r.peek();
        if (status & 0x80) {
            r.u8();
        } else {
            if (running == 0) throw MalformedFile("data byte without running status");
            status = running;
        }

        if (status == 0xFF) {
            running = 0;
            std::uint8_t type = r.u8();
            std::uint32_t len = r.vlq();
            auto payload = r.bytes(len);
            if (type == 0x2F) {
                break;
            }
            if (type == 0x51 && len >= 3) {
                std::uint32_t us = (std::uint32_t{payload[0]} << 16) | (std::uint32_t{payload[1]} << 8) | payload[2];
                if (us > 0) out.tempos.push_back({tick, out.tempos.size(), us});
            }
            continue;
        }
        if (status == 0xF0 || status == 0xF7) {
            running = 0;
            r.skip(r.vlq());
            continue;
        }
        if (status >= 0xF0) {
            throw MalformedFile("system message inside a track");
        }

        running = status;
        const std::uint8_t kind = status & 0xF0;
        const int data_len = (kind == 0xC0 || kind == 0xD0) ? 1 : 2;
        std::array<std::uint8_t, 2> data{};
        for (int i = 0; i < data_len; ++i) {
            data[i] = r.u8();
            if (data[i] & 0x80) throw MalformedFile("status byte where data byte expected");
        }
        if (kind == 0x90 || kind == 0x80) {
            const bool on = kind == 0x90 && data[1] > 0;
            out.notes.push_back({tick, on, track, order++, data[0], data[1]});
        }
    }
    out.track_end[static_cast<std::size_t>(track)] = tick;
}

class TempoMap {
public:
    TempoMap(std::vector<TempoEvent> tempos, int ticks_per_quarter, double smpte_seconds_per_tick)
        : tpq_(ticks_per_quarter), smpte_(smpte_seconds_per_tick) {
        std::stable_sort(tempos.begin(), tempos.end(),
                         [](const TempoEvent& a, const TempoEvent& b) { return a.tick < b.tick; });
        segments_.push_back({0, 0.0, 500000});
        for (const auto& t : tempos) {
            Segment& last = segments_.back();
            double sec = seconds_in(last, t.tick);
            if (t.tick == last.tick) {
                last.us_per_quarter = t.us_per_quarter;
            } else {
                segments_.push_back({t.tick, sec, t.us_per_quarter});
            }
        }
    }

    double seconds(std::uint64_t tick) const {
        if (smpte_ > 0.0) return static_cast<double>(tick) * smpte_;
        auto it = std::upper_bound(segments_.begin(), segments_.end(), tick,
                                   [](std::uint64_t t, const Segment& s) { return t < s.tick; });
        return seconds_in(*(it - 1), tick);
    }

private:
    struct Segment {
        std::uint64_t tick;
        double start_seconds;
        std::uint32_t us_per_quarter;
    };

    double seconds_in(const Segment& s, std::uint64_t tick) const {
        return s.start_seconds + static_cast<double>(tick - s.tick) * static_cast<double>(s.us_per_quarter) /
                                     (static_cast<double>(tpq_) * 1e6);
    }

    int tpq_;
    double smpte_;
    std::vector<Segment> segments_;
};

}  // namespace

NoteList parse_midi(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (r.remaining() < 14 || r.tag() != "MThd") {
        throw MalformedFile("missing MThd header");
    }
    const std::uint32_t header_len = r.u32();
    if (header_len < 6) throw MalformedFile("header chunk too short");
    const std::uint16_t format = r.u16();
    const std::uint16_t ntracks = r.u16();
    const std::uint16_t division = r.u16();
    r.skip(header_len - 6);

    if (format == 2) throw UnsupportedFormat("SMF format 2 is not supported");
    if (format > 2) throw MalformedFile("unknown SMF format " + std::to_string(format));

    NoteList result;
    double smpte_seconds_per_tick = 0.0;
    if (division & 0x8000) {
        const int fps = -static_cast<int>(static_cast<std::int8_t>(division >> 8));
        const int ticks_per_frame = division & 0xFF;
        if (fps <= 0 || ticks_per_frame == 0) throw MalformedFile("bad SMPTE division");
        smpte_seconds_per_tick = 1.0 / (fps * ticks_per_frame);
        result.ticks_per_quarter = 480;
    } else {
        if (division == 0) throw MalformedFile("zero ticks per quarter note");
        result.ticks_per_quarter = division;
    }

    TrackScan scan;
    scan.track_end.assign(ntracks, 0);
    int track = 0;
    while (track < ntracks) {
        if (r.remaining() < 8) throw MalformedFile("truncated chunk header");
        const auto id = r.tag();
        const std::uint32_t len = r.u32();
        auto chunk = r.bytes(len);
        if (id != "MTrk") continue;
        scan_track(chunk, track, scan);
        ++track;
    }

    const TempoMap tempo(std::move(scan.tempos), result.ticks_per_quarter, smpte_seconds_per_tick);

    auto& events = scan.notes;
    std::stable_sort(events.begin(), events.end(), [](const RawNoteEvent& a, const RawNoteEvent& b) {
        // Offs before ons at the same tick so a release and re-strike on one
        // tick close and reopen in that order.
        return std::tie(a.tick, a.on, a.track, a.order) < std::tie(b.tick, b.on, b.track, b.order);
    });

    struct Open {
        std::uint64_t tick;
        int velocity;
        int track;
    };
    std::array<std::optional<Open>, 128> open{};
    std::vector<Note> notes;

    auto close = [&](int pitch, std::uint64_t tick) {
        auto& o = open[static_cast<std::size_t>(pitch)];
        if (o && tick > o->tick) {
            notes.push_back({pitch, tempo.seconds(o->tick), tempo.seconds(tick), o->velocity});
        }
        o.reset();
    };

    for (const auto& e : events) {
        if (e.pitch < kMinPitch || e.pitch > kMaxPitch) continue;
        if (e.on) {
            close(e.pitch, e.tick);
            open[static_cast<std::size_t>(e.pitch)] = Open{e.tick, e.velocity, e.track};
        } else if (open[static_cast<std::size_t>(e.pitch)]) {
            close(e.pitch, e.tick);
        }
    }
    for (int p = 0; p < 128; ++p) {
        if (const auto& o = open[static_cast<std::size_t>(p)]) {
            close(p, scan.track_end[static_cast<std::size_t>(o->track)]);
        }
    }

    sort_notes(notes);
    result.notes = std::move(notes);
    return result;
}

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_vlq(std::vector<std::uint8_t>& out, std::uint32_t v) {
    std::array<std::uint8_t, 5> buf{};
    int n = 0;
    buf[n++] = v & 0x7F;
    while (v >>= 7) buf[n++] = static_cast<std::uint8_t>((v & 0x7F) | 0x80);
    while (n > 0) out.push_back(buf[--n]);
}

}  // namespace

std::vector<std::uint8_t> write_midi(const NoteList& list) {
    constexpr std::uint16_t kTicksPerQuarter = 480;
    constexpr double kTicksPerSecond = 960.0;  // 120 BPM

    struct Ev {
        std::uint32_t tick;
        bool on;
        int pitch;
        int velocity;
    };
    std::vector<Ev> evs;
    evs.reserve(list.notes.size() * 2);
    for (const Note& n : list.notes) {
        const auto on = static_cast<std::uint32_t>(std::llround(std::max(0.0, n.onset) * kTicksPerSecond));
        auto off = static_cast<std::uint32_t>(std::llround(n.offset * kTicksPerSecond));
        off = std::max(off, on + 1);
        evs.push_back({on, true, n.pitch, std::clamp(n.velocity, 1, 127)});
        evs.push_back({off, false, n.pitch, 64});
    }
    std::stable_sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) {
        return std::tie(a.tick, a.on, a.pitch) < std::tie(b.tick, b.on, b.pitch);
    });

    std::vector<std::uint8_t> track;
    std::uint32_t last = 0;
    for (const Ev& e : evs) {
        put_vlq(track, e.tick - last);
        last = e.tick;
        track.push_back(e.on ? 0x90 : 0x80);
        track.push_back(static_cast<std::uint8_t>(e.pitch & 0x7F));
        track.push_back(static_cast<std::uint8_t>(e.velocity & 0x7F));
    }
    put_vlq(track, 0);
    track.insert(track.end(), {0xFF, 0x2F, 0x00});

    std::vector<std::uint8_t> out;
    out.reserve(22 + track.size());
    out.insert(out.end(), {'M', 'T', 'h', 'd'});
    put_u32(out, 6);
    put_u16(out, 0);
    put_u16(out, 1);
    put_u16(out, kTicksPerQuarter);
    out.insert(out.end(), {'M', 'T', 'r', 'k'});
    put_u32(out, static_cast<std::uint32_t>(track.size()));
    out.insert(out.end(), track.begin(), track.end());
    return out;
}

NoteList read_midi_file(const std::filesystem::path& path) {
    const auto bytes = read_binary_file(path);
    NoteList list = parse_midi(bytes);
    list.source_name = path.filename().string();
    return list;
}

void write_midi_file(const std::filesystem::path& path, const NoteList& notes) {
    write_file_atomic(path, write_midi(notes));
}

}  // namespace ebox::midi
