// Copyright 2026 The attnsv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ATTNSV_FEATURES_H_
#define ATTNSV_FEATURES_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace attnsv {

constexpr int kSampleRate = 16000;
constexpr int kWindowLength = 400;  // 25 ms
constexpr int kHopLength = 160;     // 10 ms, i.e. 15 ms overlap
constexpr int kFftSize = 512;
constexpr int kNumMelBins = 40;
constexpr double kMelLowHz = 125.0;
constexpr double kMelHighHz = 7500.0;
constexpr double kLogFloor = 1e-10;
constexpr int kSegmentFrames = 80;
constexpr uint8_t kSilenceLabel = 255;

enum class Keyword : uint8_t { kA = 0, kB = 1 };

inline const char *KeywordName(Keyword k) {
  return k == Keyword::kA ? "A" : "B";
}
Keyword ParseKeyword(const std::string &name);

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kSampleRate;
};

using FloatMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FeatureMatrix {
  FloatMatrix frames;           // T x D
  std::vector<uint8_t> labels;  // per frame; kSilenceLabel or phoneme index
  std::string utterance_id;
  int speaker = -1;
  Keyword keyword = Keyword::kA;

  Eigen::Index num_frames() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }
  // D x T in double precision, the layout the encoder consumes.
  Eigen::MatrixXd AsColumns() const;
};

// Hann-windowed 400-sample frames at a 160-sample hop, one per row.
Eigen::MatrixXd FrameSignal(const AudioClip &clip);

// Triangular filters on the mel scale, kNumMelBins x (kFftSize / 2 + 1).
const Eigen::MatrixXd &MelFilterbank();
double HzToMel(double hz);
double MelToHz(double mel);
// Center frequency of filter `bin` (0-based).
double MelBinCenterHz(int bin);

// Power spectrum -> mel filterbank -> natural log floored at kLogFloor.
FeatureMatrix LogMel(const Eigen::MatrixXd &frames);

struct SynthSpec {
  int num_speakers = 80;
  int utterances_per_speaker = 20;
  // Global per-keyword phoneme directions; norm of each template.
  double template_scale = 2.0;
  // Norm of every speaker offset.
  double speaker_scale = 2.0;
  double noise_level = 1.0;
  double silence_level = -1.0;
  // Inclusive per-phoneme duration range, frames.
  int min_phoneme_frames_a = 9;
  int max_phoneme_frames_a = 15;
  int min_phoneme_frames_b = 12;
  int max_phoneme_frames_b = 20;
  uint64_t seed = 1;

  static int PhonemeCount(Keyword k) { return k == Keyword::kA ? 4 : 3; }
  void Validate() const;
};

// Global structure shared by every utterance of a corpus: phoneme
// templates per keyword and one offset direction per speaker.
class SynthCorpusModel {
 public:
  explicit SynthCorpusModel(const SynthSpec &spec);

  const SynthSpec &spec() const { return spec_; }
  const Eigen::VectorXd &phoneme_template(Keyword k, int phoneme) const;
  const Eigen::VectorXd &speaker_offset(int speaker) const;

  // Leading silence, the keyword's phoneme segments (template + speaker
  // offset + noise), trailing silence; always kSegmentFrames long.
  FeatureMatrix Utterance(int speaker, Keyword keyword,
                          std::mt19937_64 &rng) const;
  FeatureMatrix Utterance(int speaker, Keyword keyword, int index) const;

 private:
  SynthSpec spec_;
  std::vector<Eigen::VectorXd> templates_[2];
  std::vector<Eigen::VectorXd> speakers_;
};

// Per-utterance stream derived from (seed, speaker, keyword, index).
std::mt19937_64 UtteranceRng(uint64_t seed, int speaker, Keyword keyword,
                             int index);

enum class FeatureFileErrorCode { kIo, kBadMagic, kTruncatedPayload, kShapeMismatch };

class FeatureFileError : public DataError {
 public:
  FeatureFileError(FeatureFileErrorCode code, const std::string &what)
      : DataError(what), code_(code) {}
  FeatureFileErrorCode code() const { return code_; }

 private:
  FeatureFileErrorCode code_;
};

// "ATNF", u32 T, u32 D, u32 label flag, T*D f32 row-major, T label bytes.
// All integers and floats little-endian.
void WriteFeatures(const std::string &path, const FeatureMatrix &features);
// When expected_dim > 0 a different D raises kShapeMismatch.
FeatureMatrix ReadFeatures(const std::string &path, int expected_dim = kNumMelBins);
void WriteFeaturesCsv(const std::string &path, const FeatureMatrix &features);

}  // namespace attnsv

#endif  // ATTNSV_FEATURES_H_
