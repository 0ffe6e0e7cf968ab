#include <doctest.h>

#include "melmix/score.hpp"
#include "test_helpers.hpp"

using namespace melmix;

TEST_SUITE_BEGIN("score");

TEST_CASE("hangul decomposition pinned examples") {
  // U+B9C8: offset 3528 = 6*588 + 0*28 + 0.
  const PhonemeTriple ma = decompose_hangul(U'마');
  CHECK(ma.onset == 6);
  CHECK(ma.nucleus == kMedialIdBase + 0);
  CHECK(!ma.coda.has_value());

  // U+AC15: offset 21 -> final index 21.
  const PhonemeTriple gang = decompose_hangul(U'강');
  CHECK(gang.onset == 0);
  CHECK(gang.nucleus == kMedialIdBase + 0);
  REQUIRE(gang.coda.has_value());
  CHECK(*gang.coda == kFinalIdBase + 20);

  CHECK_THROWS_AS(decompose_hangul(U'A'), InputError);
  CHECK_THROWS_AS(decompose_hangul(static_cast<char32_t>(0xAC00 - 1)), InputError);
  CHECK_THROWS_AS(decompose_hangul(static_cast<char32_t>(0xD7A4)), InputError);
}

TEST_CASE("hangul decomposition matches the block arithmetic on all 11172") {
  for (char32_t cp = kHangulFirst; cp <= kHangulLast; ++cp) {
    const int s = static_cast<int>(cp - kHangulFirst);
    const PhonemeTriple t = decompose_hangul(cp);
    CHECK(t.onset == s / 588);
    CHECK(t.nucleus - kMedialIdBase == (s % 588) / 28);
    if (s % 28 == 0) {
      CHECK(!t.coda.has_value());
    } else {
      CHECK(*t.coda - kFinalIdBase == s % 28 - 1);
    }
  }
}

TEST_CASE("score json parsing") {
  CHECK(parse_score_json(R"({"notes":[]})").notes.empty());

  const Score one = parse_score_json(
      R"({"notes":[{"pitch":60,"start_s":0.0,"end_s":0.5,"syllable":"마"}]})");
  REQUIRE(one.notes.size() == 1);
  CHECK(one.notes[0].pitch == 60);
  CHECK(one.notes[0].start_s == 0.0);
  CHECK(one.notes[0].end_s == 0.5);
  CHECK(one.notes[0].syllable == U'마');

  CHECK_THROWS_AS(parse_score_json(
                      R"({"notes":[{"pitch":60,"start_s":0.0,"end_s":1.0,"syllable":"마"},
                                   {"pitch":62,"start_s":0.5,"end_s":1.5,"syllable":"나"}]})"),
                  FormatError);
  CHECK_THROWS_AS(parse_score_json(
                      R"({"notes":[{"pitch":60,"start_s":0,"end_s":1,"syllable":"A"}]})"),
                  FormatError);
  CHECK_THROWS_AS(parse_score_json("not json"), FormatError);
  CHECK_THROWS_AS(parse_score_json(
                      R"({"notes":[{"pitch":60,"start_s":1.0,"end_s":1.0,"syllable":"마"}]})"),
                  FormatError);
  // Rests must use pitch -1.
  CHECK_THROWS_AS(parse_score_json(
                      R"({"notes":[{"pitch":60,"start_s":0,"end_s":1,"syllable":"R"}]})"),
                  FormatError);
}

TEST_CASE("score json serialization round trips") {
  Score score;
  score.notes.push_back({60, 0.0, 0.5, U'마'});
  score.notes.push_back({kRestPitch, 0.5, 0.75, U'\0'});
  score.notes.push_back({72, 0.75, 1.25, U'강'});
  const Score back = parse_score_json(serialize_score_json(score));
  CHECK(back == score);
}

TEST_CASE("time_to_frame rounds to the nearest frame") {
  CHECK(time_to_frame(0.0) == 0);
  CHECK(time_to_frame(1.0) == 80);
  CHECK(time_to_frame(0.51) == 41);  // round(40.8)
}

TEST_CASE("alignment splits a 10-frame note as onset/nucleus/coda") {
  Score score;
  score.notes.push_back({60, 0.0, 0.125, U'강'});  // 10 frames at 80 fps
  Vocab vocab;
  const FrameAlignment a = align_to_frames(score, 3, vocab);
  REQUIRE(a.frames == 10);
  const PhonemeTriple t = decompose_hangul(U'강');
  for (int f = 0; f < 3; ++f) CHECK(a.phoneme_ids[f] == t.onset);
  for (int f = 3; f < 7; ++f) CHECK(a.phoneme_ids[f] == t.nucleus);
  for (int f = 7; f < 10; ++f) CHECK(a.phoneme_ids[f] == *t.coda);
  for (int f = 0; f < 10; ++f) CHECK(a.pitch_ids[f] == vocab.pitch_id(60));
}

TEST_CASE("alignment without a coda gives the rest to the nucleus") {
  Score score;
  score.notes.push_back({60, 0.0, 0.125, U'마'});
  Vocab vocab;
  const FrameAlignment a = align_to_frames(score, 3, vocab);
  const PhonemeTriple t = decompose_hangul(U'마');
  for (int f = 0; f < 3; ++f) CHECK(a.phoneme_ids[f] == t.onset);
  for (int f = 3; f < 10; ++f) CHECK(a.phoneme_ids[f] == t.nucleus);
}

TEST_CASE("alignment clamps k on short notes") {
  Score score;
  score.notes.push_back({60, 0.0, 0.0625, U'강'});  // 5 frames
  Vocab vocab;
  const FrameAlignment a = align_to_frames(score, 3, vocab);
  const PhonemeTriple t = decompose_hangul(U'강');
  REQUIRE(a.frames == 5);
  CHECK(a.phoneme_ids[0] == t.onset);
  CHECK(a.phoneme_ids[1] == t.onset);
  CHECK(a.phoneme_ids[2] == t.nucleus);
  CHECK(a.phoneme_ids[3] == *t.coda);
  CHECK(a.phoneme_ids[4] == *t.coda);
}

TEST_CASE("allocation sums to the span with nucleus >= 1, exhaustively") {
  Vocab vocab;
  for (int n = 1; n <= 20; ++n) {
    for (int k = 0; k <= 5; ++k) {
      for (const bool coda : {false, true}) {
        Score score;
        score.notes.push_back({60, 0.0, n / 80.0, coda ? U'강' : U'마'});
        const FrameAlignment a = align_to_frames(score, k, vocab);
        REQUIRE(a.frames == static_cast<std::size_t>(n));
        const PhonemeTriple t = decompose_hangul(coda ? U'강' : U'마');
        int onset = 0, nucleus = 0, coda_frames = 0;
        for (std::size_t f = 0; f < a.frames; ++f) {
          if (a.phoneme_ids[f] == t.onset) ++onset;
          else if (a.phoneme_ids[f] == t.nucleus) ++nucleus;
          else if (t.coda && a.phoneme_ids[f] == *t.coda) ++coda_frames;
        }
        CHECK(onset + nucleus + coda_frames == n);
        CHECK(nucleus >= 1);
        const int k_eff = std::min<int>(k, (n - 1) / (coda ? 2 : 1));
        CHECK(onset == k_eff);
        CHECK(coda_frames == (coda ? k_eff : 0));
      }
    }
  }
}

TEST_CASE("every frame gets exactly one id pair, gaps become rests") {
  Score score;
  score.notes.push_back({60, 0.0, 0.25, U'마'});
  score.notes.push_back({64, 0.5, 0.75, U'강'});
  Vocab vocab;
  const FrameAlignment a = align_to_frames(score, 3, vocab, 70);
  REQUIRE(a.frames == 70);
  for (std::size_t f = 0; f < a.frames; ++f) {
    CHECK(a.pitch_ids[f] >= 0);
    CHECK(a.pitch_ids[f] < vocab.pitch_vocab_size());
    CHECK(a.phoneme_ids[f] >= 0);
    CHECK(a.phoneme_ids[f] < vocab.phoneme_vocab_size());
  }
  // The gap [20, 40) and the tail [60, 70) are rests.
  for (std::size_t f = 20; f < 40; ++f) {
    CHECK(a.pitch_ids[f] == Vocab::kSilencePitchId);
    CHECK(a.phoneme_ids[f] == kRestPhonemeId);
  }
  for (std::size_t f = 60; f < 70; ++f) {
    CHECK(a.phoneme_ids[f] == kRestPhonemeId);
  }
}

TEST_CASE("a zero-span note steals a frame from a preceding rest") {
  Score score;
  score.notes.push_back({60, 0.0, 0.25, U'마'});
  // Rounds to [40, 40): zero span, but frames [20, 40) are rest.
  score.notes.push_back({64, 0.4995, 0.5005, U'나'});
  Vocab vocab;
  const FrameAlignment a = align_to_frames(score, 3, vocab);
  const PhonemeTriple t = decompose_hangul(U'나');
  CHECK(a.phoneme_ids[39] == t.nucleus);
  CHECK(a.pitch_ids[39] == vocab.pitch_id(64));

  // With no rest before it, the same note is an error.
  Score bad;
  bad.notes.push_back({64, 0.0001, 0.0005, U'나'});
  CHECK_THROWS_AS(align_to_frames(bad, 3, vocab), AlignmentError);
}

TEST_CASE("total_frames shorter than the score is a range error") {
  Score score;
  score.notes.push_back({60, 0.0, 1.0, U'마'});
  Vocab vocab;
  CHECK_THROWS_AS(align_to_frames(score, 3, vocab, 40), RangeError);
}

TEST_CASE("out-of-vocabulary pitch is a range error") {
  Score score;
  score.notes.push_back({30, 0.0, 0.5, U'마'});
  Vocab vocab;
  CHECK_THROWS_AS(align_to_frames(score, 3, vocab), RangeError);
  CHECK(vocab.pitch_id(55) == 0);
  CHECK(vocab.pitch_id(78) == 23);
  CHECK(vocab.pitch_id(kRestPitch) == Vocab::kSilencePitchId);
  CHECK_THROWS_AS(vocab.pitch_id(79), RangeError);
}

TEST_CASE("phoneme vocabulary layout is dense") {
  Vocab vocab;
  CHECK(vocab.pitch_vocab_size() == 25);
  CHECK(vocab.phoneme_vocab_size() == kPadPhonemeId + 1);
  CHECK(kRestPhonemeId == 19 + 21 + 27);
  CHECK(kPadPhonemeId == kRestPhonemeId + 1);
}

TEST_SUITE_END();
