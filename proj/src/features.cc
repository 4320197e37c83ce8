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

#include "attnsv/features.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numbers>

#include "attnsv/binary_io.h"

namespace attnsv {

Keyword ParseKeyword(const std::string &name) {
  if (name == "A" || name == "a") return Keyword::kA;
  if (name == "B" || name == "b") return Keyword::kB;
  throw DataError("unknown keyword '" + name + "'");
}

Eigen::MatrixXd FeatureMatrix::AsColumns() const {
  return frames.transpose().cast<double>();
}

Eigen::MatrixXd FrameSignal(const AudioClip &clip) {
  if (clip.sample_rate != kSampleRate)
    throw DataError("FrameSignal: sample rate must be 16000 Hz, got " +
                    std::to_string(clip.sample_rate));
  const auto len = static_cast<Eigen::Index>(clip.samples.size());
  if (len < kWindowLength)
    throw DataError("FrameSignal: clip has " + std::to_string(len) +
                    " samples, shorter than one 400-sample window");
  const Eigen::Index num_frames = (len - kWindowLength) / kHopLength + 1;
  Eigen::VectorXd hann(kWindowLength);
  for (int n = 0; n < kWindowLength; ++n)
    hann(n) = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n /
                                   (kWindowLength - 1));
  Eigen::MatrixXd frames(num_frames, kWindowLength);
  for (Eigen::Index t = 0; t < num_frames; ++t)
    for (int n = 0; n < kWindowLength; ++n)
      frames(t, n) = clip.samples[t * kHopLength + n] * hann(n);
  return frames;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

namespace {

double MelPoint(int i) {
  const double lo = HzToMel(kMelLowHz), hi = HzToMel(kMelHighHz);
  return lo + (hi - lo) * i / (kNumMelBins + 1);
}

}  // namespace

double MelBinCenterHz(int bin) { return MelToHz(MelPoint(bin + 1)); }

const Eigen::MatrixXd &MelFilterbank() {
  static const Eigen::MatrixXd bank = [] {
    const int num_fft_bins = kFftSize / 2 + 1;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(kNumMelBins, num_fft_bins);
    for (int m = 0; m < kNumMelBins; ++m) {
      const double left = MelPoint(m), center = MelPoint(m + 1),
                   right = MelPoint(m + 2);
      for (int k = 0; k < num_fft_bins; ++k) {
        const double mel = HzToMel(static_cast<double>(k) * kSampleRate / kFftSize);
        if (mel > left && mel <= center)
          w(m, k) = (mel - left) / (center - left);
        else if (mel > center && mel < right)
          w(m, k) = (right - mel) / (right - center);
      }
    }
    return w;
  }();
  return bank;
}

FeatureMatrix LogMel(const Eigen::MatrixXd &frames) {
  if (frames.cols() != kWindowLength)
    throw DataError("LogMel: frames must have 400 samples each");
  const int num_fft_bins = kFftSize / 2 + 1;
  double *in = fftw_alloc_real(kFftSize);
  fftw_complex *out = fftw_alloc_complex(num_fft_bins);
  fftw_plan plan = fftw_plan_dft_r2c_1d(kFftSize, in, out, FFTW_ESTIMATE);

  const Eigen::MatrixXd &bank = MelFilterbank();
  FeatureMatrix result;
  result.frames.resize(frames.rows(), kNumMelBins);
  Eigen::VectorXd power(num_fft_bins);
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    std::fill(in, in + kFftSize, 0.0);
    for (int n = 0; n < kWindowLength; ++n) in[n] = frames(t, n);
    fftw_execute(plan);
    for (int k = 0; k < num_fft_bins; ++k)
      power(k) = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    const Eigen::VectorXd mel = bank * power;
    for (int m = 0; m < kNumMelBins; ++m)
      result.frames(t, m) =
          static_cast<float>(std::log(std::max(mel(m), kLogFloor)));
  }
  fftw_destroy_plan(plan);
  fftw_free(out);
  fftw_free(in);
  return result;
}

void SynthSpec::Validate() const {
  if (num_speakers < 1 || utterances_per_speaker < 1)
    throw DataError("SynthSpec: need at least one speaker and utterance");
  if (noise_level < 0.0) throw DataError("SynthSpec: noise_level < 0");
  if (min_phoneme_frames_a < 1 || min_phoneme_frames_b < 1 ||
      min_phoneme_frames_a > max_phoneme_frames_a ||
      min_phoneme_frames_b > max_phoneme_frames_b)
    throw DataError("SynthSpec: invalid phoneme duration range");
}

std::mt19937_64 UtteranceRng(uint64_t seed, int speaker, Keyword keyword,
                             int index) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(speaker),
                    static_cast<uint32_t>(keyword),
                    static_cast<uint32_t>(index)};
  return std::mt19937_64(seq);
}

namespace {

Eigen::VectorXd RandomDirection(std::mt19937_64 &rng, double norm) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(kNumMelBins);
  for (int d = 0; d < kNumMelBins; ++d) v(d) = normal(rng);
  return v * (norm / v.norm());
}

std::mt19937_64 StructureRng(uint64_t seed, uint32_t kind, uint32_t index) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    0xA77Eu, kind, index};
  return std::mt19937_64(seq);
}

}  // namespace

SynthCorpusModel::SynthCorpusModel(const SynthSpec &spec) : spec_(spec) {
  spec_.Validate();
  for (Keyword k : {Keyword::kA, Keyword::kB}) {
    auto rng = StructureRng(spec_.seed, static_cast<uint32_t>(k), 0);
    for (int p = 0; p < SynthSpec::PhonemeCount(k); ++p)
      templates_[static_cast<int>(k)].push_back(
          RandomDirection(rng, spec_.template_scale));
  }
  for (int s = 0; s < spec_.num_speakers; ++s) {
    auto rng = StructureRng(spec_.seed, 2, static_cast<uint32_t>(s));
    speakers_.push_back(RandomDirection(rng, spec_.speaker_scale));
  }
}

const Eigen::VectorXd &SynthCorpusModel::phoneme_template(Keyword k,
                                                          int phoneme) const {
  return templates_[static_cast<int>(k)].at(phoneme);
}

const Eigen::VectorXd &SynthCorpusModel::speaker_offset(int speaker) const {
  return speakers_.at(speaker);
}

FeatureMatrix SynthCorpusModel::Utterance(int speaker, Keyword keyword,
                                          std::mt19937_64 &rng) const {
  const int phonemes = SynthSpec::PhonemeCount(keyword);
  const int lo = keyword == Keyword::kA ? spec_.min_phoneme_frames_a
                                        : spec_.min_phoneme_frames_b;
  const int hi = keyword == Keyword::kA ? spec_.max_phoneme_frames_a
                                        : spec_.max_phoneme_frames_b;
  std::uniform_int_distribution<int> duration(lo, hi);
  std::vector<int> durations(phonemes);
  int total = 0;
  for (int &d : durations) total += (d = duration(rng));
  if (total > kSegmentFrames)
    throw DataError("synthetic utterance: phoneme durations total " +
                    std::to_string(total) + " frames, more than " +
                    std::to_string(kSegmentFrames));
  const int silence = kSegmentFrames - total;
  std::uniform_int_distribution<int> lead_dist(silence / 4, silence - silence / 4);
  const int lead = lead_dist(rng);

  FeatureMatrix out;
  out.frames.resize(kSegmentFrames, kNumMelBins);
  out.labels.assign(kSegmentFrames, kSilenceLabel);
  out.speaker = speaker;
  out.keyword = keyword;
  std::normal_distribution<double> normal;
  const Eigen::VectorXd &offset = speaker_offset(speaker);
  int t = 0;
  auto emit = [&](const Eigen::VectorXd *mean, uint8_t label) {
    for (int d = 0; d < kNumMelBins; ++d) {
      const double base = mean ? (*mean)(d) : spec_.silence_level;
      out.frames(t, d) = static_cast<float>(base + spec_.noise_level * normal(rng));
    }
    out.labels[t] = label;
    ++t;
  };
  for (int i = 0; i < lead; ++i) emit(nullptr, kSilenceLabel);
  for (int p = 0; p < phonemes; ++p) {
    const Eigen::VectorXd mean = phoneme_template(keyword, p) + offset;
    for (int i = 0; i < durations[p]; ++i) emit(&mean, static_cast<uint8_t>(p));
  }
  while (t < kSegmentFrames) emit(nullptr, kSilenceLabel);
  return out;
}

FeatureMatrix SynthCorpusModel::Utterance(int speaker, Keyword keyword,
                                          int index) const {
  auto rng = UtteranceRng(spec_.seed, speaker, keyword, index);
  FeatureMatrix out = Utterance(speaker, keyword, rng);
  char id[64];
  std::snprintf(id, sizeof(id), "s%03d_%s_%03d", speaker, KeywordName(keyword),
                index);
  out.utterance_id = id;
  return out;
}

namespace {

constexpr char kFeatureMagic[4] = {'A', 'T', 'N', 'F'};

}  // namespace

void WriteFeatures(const std::string &path, const FeatureMatrix &features) {
  const bool has_labels = !features.labels.empty();
  if (has_labels &&
      static_cast<Eigen::Index>(features.labels.size()) != features.num_frames())
    throw FeatureFileError(FeatureFileErrorCode::kShapeMismatch,
                           "WriteFeatures: label count differs from frame count");
  ByteWriter w;
  w.Bytes(kFeatureMagic, 4);
  w.U32(static_cast<uint32_t>(features.num_frames()));
  w.U32(static_cast<uint32_t>(features.dim()));
  w.U32(has_labels ? 1u : 0u);
  for (Eigen::Index i = 0; i < features.frames.size(); ++i)
    w.F32(features.frames.data()[i]);
  if (has_labels) w.Bytes(features.labels.data(), features.labels.size());
  if (!w.WriteFile(path))
    throw FeatureFileError(FeatureFileErrorCode::kIo,
                           "cannot write feature file " + path);
}

FeatureMatrix ReadFeatures(const std::string &path, int expected_dim) {
  std::string bytes;
  if (!ReadFileBytes(path, &bytes))
    throw FeatureFileError(FeatureFileErrorCode::kIo,
                           "cannot read feature file " + path);
  ByteReader r(bytes);
  auto truncated = [&] {
    return FeatureFileError(FeatureFileErrorCode::kTruncatedPayload,
                            path + ": truncated payload");
  };
  char magic[4];
  if (!r.Bytes(magic, 4)) throw truncated();
  if (!std::equal(magic, magic + 4, kFeatureMagic))
    throw FeatureFileError(FeatureFileErrorCode::kBadMagic, path + ": bad magic");
  uint32_t t = 0, d = 0, flag = 0;
  if (!r.U32(&t) || !r.U32(&d) || !r.U32(&flag)) throw truncated();
  if (flag > 1 || (expected_dim > 0 && d != static_cast<uint32_t>(expected_dim)))
    throw FeatureFileError(FeatureFileErrorCode::kShapeMismatch,
                           path + ": shape mismatch (T=" + std::to_string(t) +
                               ", D=" + std::to_string(d) + ")");
  const uint64_t payload = uint64_t{t} * d * 4 + (flag ? t : 0);
  if (r.remaining() < payload) throw truncated();
  if (r.remaining() > payload)
    throw FeatureFileError(FeatureFileErrorCode::kShapeMismatch,
                           path + ": trailing bytes after payload");
  FeatureMatrix out;
  out.frames.resize(t, d);
  for (Eigen::Index i = 0; i < out.frames.size(); ++i)
    r.F32(&out.frames.data()[i]);
  if (flag) {
    out.labels.resize(t);
    r.Bytes(out.labels.data(), t);
  }
  return out;
}

void WriteFeaturesCsv(const std::string &path, const FeatureMatrix &features) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path);
  os << "frame,label";
  for (Eigen::Index d = 0; d < features.dim(); ++d) os << ",c" << d;
  os << "\n" << std::setprecision(9);
  for (Eigen::Index t = 0; t < features.num_frames(); ++t) {
    os << t << ",";
    if (!features.labels.empty()) {
      if (features.labels[t] == kSilenceLabel) os << "sil";
      else os << static_cast<int>(features.labels[t]);
    }
    for (Eigen::Index d = 0; d < features.dim(); ++d)
      os << "," << features.frames(t, d);
    os << "\n";
  }
}

}  // namespace attnsv
