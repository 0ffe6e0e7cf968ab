#include "melmix/smf.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace melmix {

namespace {

struct ByteReader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) throw FormatError("smf: truncated file");
  }
  std::uint8_t u8() {
    need(1);
    return bytes[pos++];
  }
  std::uint8_t peek() const {
    need(1);
    return bytes[pos];
  }
  std::uint16_t u16() {
    need(2);
    const std::uint16_t v = static_cast<std::uint16_t>(bytes[pos]) << 8 | bytes[pos + 1];
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = v << 8 | bytes[pos + i];
    pos += 4;
    return v;
  }
  std::string tag() {
    need(4);
    std::string s(reinterpret_cast<const char*>(bytes.data() + pos), 4);
    pos += 4;
    return s;
  }
  std::uint32_t vlq() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint8_t b = u8();
      v = (v << 7) | (b & 0x7f);
      if (!(b & 0x80)) return v;
    }
    throw FormatError("smf: variable-length quantity too long");
  }
  void skip(std::size_t n) {
    need(n);
    pos += n;
  }
};

struct TempoEvent {
  std::int64_t tick;
  std::uint32_t usec_per_quarter;
};

struct RawNote {
  std::int64_t on_tick;
  std::int64_t off_tick;
  int pitch;
};

// Piecewise-linear tick->seconds map.
class TempoMap {
 public:
  explicit TempoMap(std::vector<TempoEvent> events, int ppq) : ppq_(ppq) {
    std::stable_sort(events.begin(), events.end(),
                     [](const TempoEvent& a, const TempoEvent& b) {
                       return a.tick < b.tick;
                     });
    // Later events at the same tick replace earlier ones.
    std::int64_t t_prev = 0;
    std::uint32_t usec = 500000;  // SMF default: 120 bpm
    double seconds = 0.0;
    segments_.push_back({0, 0.0, usec});
    for (const TempoEvent& e : events) {
      seconds += double(e.tick - t_prev) * usec / (double(ppq_) * 1e6);
      usec = e.usec_per_quarter;
      t_prev = e.tick;
      if (!segments_.empty() && segments_.back().tick == e.tick) {
        segments_.back().usec_per_quarter = usec;
        segments_.back().seconds = seconds;
      } else {
        segments_.push_back({e.tick, seconds, usec});
      }
    }
  }

  double seconds_at(std::int64_t tick) const {
    const Segment* seg = &segments_.front();
    for (const Segment& s : segments_) {
      if (s.tick <= tick) seg = &s;
      else break;
    }
    return seg->seconds +
           double(tick - seg->tick) * seg->usec_per_quarter / (double(ppq_) * 1e6);
  }

 private:
  struct Segment {
    std::int64_t tick;
    double seconds;
    std::uint32_t usec_per_quarter;
  };
  std::vector<Segment> segments_;
  int ppq_;
};

}  // namespace

Score parse_smf(const std::vector<std::uint8_t>& bytes,
                const std::vector<std::string>& lyrics) {
  ByteReader r{bytes};
  if (r.tag() != "MThd") throw FormatError("smf: missing MThd header");
  const std::uint32_t header_len = r.u32();
  if (header_len < 6) throw FormatError("smf: short MThd chunk");
  const std::uint16_t format = r.u16();
  const std::uint16_t ntrks = r.u16();
  const std::uint16_t division = r.u16();
  r.skip(header_len - 6);
  if (format > 1) {
    throw FormatError("smf: format " + std::to_string(format) + " unsupported");
  }
  if (division & 0x8000) {
    throw FormatError("smf: SMPTE time division unsupported");
  }
  const int ppq = division;
  if (ppq == 0) throw FormatError("smf: zero ticks per quarter note");

  std::vector<TempoEvent> tempo_events;
  std::vector<RawNote> notes;

  for (std::uint16_t trk = 0; trk < ntrks; ++trk) {
    if (r.tag() != "MTrk") throw FormatError("smf: missing MTrk chunk");
    const std::uint32_t len = r.u32();
    const std::size_t track_end = r.pos + len;
    if (track_end > bytes.size()) throw FormatError("smf: truncated track");

    std::int64_t tick = 0;
    std::uint8_t running_status = 0;
    // (channel<<8 | pitch) -> index into notes, for open notes
    std::map<int, std::size_t> open;

    while (r.pos < track_end) {
      tick += r.vlq();
      std::uint8_t status = r.peek();
      if (status & 0x80) {
        r.u8();
        if (status < 0xf0) running_status = status;
      } else {
        if (!(running_status & 0x80)) throw FormatError("smf: dangling data byte");
        status = running_status;
      }

      if (status == 0xff) {  // meta
        const std::uint8_t type = r.u8();
        const std::uint32_t mlen = r.vlq();
        if (type == 0x51) {
          if (mlen != 3) throw FormatError("smf: bad tempo event length");
          std::uint32_t usec = 0;
          for (int i = 0; i < 3; ++i) usec = usec << 8 | r.u8();
          tempo_events.push_back({tick, usec});
        } else {
          r.skip(mlen);
        }
      } else if (status == 0xf0 || status == 0xf7) {  // sysex
        r.skip(r.vlq());
      } else {
        const std::uint8_t kind = status & 0xf0;
        const int channel = status & 0x0f;
        switch (kind) {
          case 0x80:    // note off
          case 0x90: {  // note on
            const std::uint8_t pitch = r.u8();
            const std::uint8_t velocity = r.u8();
            const bool is_on = kind == 0x90 && velocity > 0;
            const int key = channel << 8 | pitch;
            if (is_on) {
              if (open.count(key)) {
                throw FormatError("smf: overlapping note-on for the same pitch");
              }
              open[key] = notes.size();
              notes.push_back({tick, -1, pitch});
            } else {
              auto it = open.find(key);
              if (it == open.end()) {
                throw FormatError("smf: note-off without matching note-on");
              }
              notes[it->second].off_tick = tick;
              open.erase(it);
            }
            break;
          }
          case 0xa0:
          case 0xb0:
          case 0xe0:
            r.skip(2);
            break;
          case 0xc0:
          case 0xd0:
            r.skip(1);
            break;
          default:
            throw FormatError("smf: unknown status byte");
        }
      }
    }
    if (r.pos != track_end) throw FormatError("smf: track length mismatch");
    if (!open.empty()) throw FormatError("smf: note-on without note-off");
  }

  std::stable_sort(notes.begin(), notes.end(),
                   [](const RawNote& a, const RawNote& b) {
                     return a.on_tick < b.on_tick;
                   });
  for (std::size_t i = 0; i + 1 < notes.size(); ++i) {
    if (notes[i].off_tick > notes[i + 1].on_tick) {
      throw FormatError("smf: overlapping notes (monophonic input required)");
    }
  }
  if (notes.size() != lyrics.size()) {
    throw AlignmentError("smf: " + std::to_string(notes.size()) + " notes but " +
                         std::to_string(lyrics.size()) + " lyric syllables");
  }

  TempoMap tempo(std::move(tempo_events), ppq);
  Score score;
  score.notes.reserve(notes.size());
  for (std::size_t i = 0; i < notes.size(); ++i) {
    NoteEvent n;
    n.pitch = notes[i].pitch;
    n.start_s = tempo.seconds_at(notes[i].on_tick);
    n.end_s = tempo.seconds_at(notes[i].off_tick);
    const char32_t cp = single_codepoint(lyrics[i]);
    if (!is_hangul_syllable(cp)) {
      throw FormatError("smf lyrics: syllable " + std::to_string(i) +
                        " is not a Hangul syllable");
    }
    n.syllable = cp;
    score.notes.push_back(n);
  }
  validate_score(score);
  return score;
}

std::vector<std::string> parse_lyrics_text(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace melmix
