#pragma once

// Corpus manifests (one CSV row per recorded utterance), the seeded
// synthetic stand-in corpus, and per-(speaker, word) repetition splits.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "asrlab/audio.hpp"
#include "asrlab/error.hpp"
#include "asrlab/frontend.hpp"
#include "asrlab/rng.hpp"
#include "asrlab/serialize.hpp"

namespace asrlab {

enum class Severity { High, Moderate, Mild };
enum class Split { None, Train, Dev, Test };

inline std::string to_string(Severity s) {
  switch (s) {
    case Severity::High: return "High";
    case Severity::Moderate: return "Moderate";
    case Severity::Mild: return "Mild";
  }
  return "";
}

inline std::optional<Severity> parse_severity(std::string_view s) {
  if (s == "High") return Severity::High;
  if (s == "Moderate") return Severity::Moderate;
  if (s == "Mild") return Severity::Mild;
  return std::nullopt;
}

inline std::string to_string(Split s) {
  switch (s) {
    case Split::None: return "";
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s.empty()) return Split::None;
  if (s == "train") return Split::Train;
  if (s == "dev") return Split::Dev;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

struct UtteranceRecord {
  std::string speaker_id;
  Severity severity = Severity::Mild;
  int word_id = 0;
  std::string word_text;
  int repetition = 0;
  std::string audio_path;  // relative paths resolve against the manifest directory
  Split split = Split::None;

  // File stem of the audio path.
  std::string utterance_id() const { return std::filesystem::path(audio_path).stem().string(); }

  friend bool operator==(const UtteranceRecord&, const UtteranceRecord&) = default;
};

struct CorpusManifest {
  std::vector<std::string> vocabulary;
  std::vector<UtteranceRecord> records;
  std::filesystem::path base_dir;

  std::size_t vocab_size() const { return vocabulary.size(); }

  std::filesystem::path resolve(const UtteranceRecord& r) const {
    const std::filesystem::path p(r.audio_path);
    return p.is_absolute() ? p : base_dir / p;
  }

  bool operator==(const CorpusManifest& o) const { return vocabulary == o.vocabulary && records == o.records; }
};

inline constexpr std::array<const char*, 7> kManifestColumns = {
    "speaker_id", "severity", "word_id", "word_text", "repetition", "audio_path", "split"};

// Rebuilds the vocabulary from the records and checks the manifest invariants.
inline void derive_vocabulary(CorpusManifest& m) {
  std::map<int, std::string> words;
  std::map<std::string, Severity> speakers;
  for (const auto& r : m.records) {
    require(r.word_id >= 0, ErrorCode::ParseError, "negative word_id");
    auto [it, inserted] = words.emplace(r.word_id, r.word_text);
    require(inserted || it->second == r.word_text, ErrorCode::InconsistentVocabulary,
            "word_id " + std::to_string(r.word_id) + " maps to both '" + it->second + "' and '" + r.word_text + "'");
    auto [sit, sinserted] = speakers.emplace(r.speaker_id, r.severity);
    require(sinserted || sit->second == r.severity, ErrorCode::ParseError,
            "speaker " + r.speaker_id + " listed with two severities");
  }
  m.vocabulary.clear();
  for (const auto& [id, text] : words) {
    require(id == static_cast<int>(m.vocabulary.size()), ErrorCode::ParseError,
            "word ids must be contiguous from 0; missing " + std::to_string(m.vocabulary.size()));
    m.vocabulary.push_back(text);
  }
  std::vector<std::string> sorted = m.vocabulary;
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), ErrorCode::InconsistentVocabulary,
          "two word ids share one text");
}

inline CorpusManifest parse_manifest(const std::vector<std::string>& lines, const std::string& origin) {
  require(!lines.empty(), ErrorCode::ParseError, origin + ": missing header row");
  const auto header = io::split_csv(lines[0]);
  std::array<std::size_t, kManifestColumns.size()> col{};
  for (std::size_t c = 0; c < kManifestColumns.size(); ++c) {
    const auto it = std::find(header.begin(), header.end(), kManifestColumns[c]);
    require(it != header.end(), ErrorCode::ParseError,
            origin + ": missing column '" + std::string(kManifestColumns[c]) + "'");
    col[c] = static_cast<std::size_t>(it - header.begin());
  }

  CorpusManifest m;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = origin + ":" + std::to_string(i + 1);
    const auto f = io::split_csv(lines[i]);
    require(f.size() == header.size(), ErrorCode::ParseError, where + ": expected " + std::to_string(header.size()) +
                                                                  " fields, got " + std::to_string(f.size()));
    UtteranceRecord r;
    r.speaker_id = f[col[0]];
    const auto sev = parse_severity(f[col[1]]);
    require(sev.has_value(), ErrorCode::ParseError, where + ": unknown severity '" + f[col[1]] + "'");
    r.severity = *sev;
    r.word_id = static_cast<int>(io::parse_int(f[col[2]], where + " word_id"));
    r.word_text = f[col[3]];
    r.repetition = static_cast<int>(io::parse_int(f[col[4]], where + " repetition"));
    r.audio_path = f[col[5]];
    const auto split = parse_split(f[col[6]]);
    require(split.has_value(), ErrorCode::ParseError, where + ": unknown split '" + f[col[6]] + "'");
    r.split = *split;
    require(!r.speaker_id.empty() && !r.audio_path.empty(), ErrorCode::ParseError, where + ": empty field");
    m.records.push_back(std::move(r));
  }
  derive_vocabulary(m);
  return m;
}

inline CorpusManifest load_manifest(const std::filesystem::path& path) {
  auto m = parse_manifest(io::read_lines(path), path.string());
  m.base_dir = path.parent_path();
  return m;
}

inline std::string manifest_csv(const CorpusManifest& m) {
  std::string out = "speaker_id,severity,word_id,word_text,repetition,audio_path,split\n";
  for (const auto& r : m.records)
    out += r.speaker_id + ',' + to_string(r.severity) + ',' + std::to_string(r.word_id) + ',' + r.word_text + ',' +
           std::to_string(r.repetition) + ',' + r.audio_path + ',' + to_string(r.split) + '\n';
  return out;
}

inline void save_manifest(const std::filesystem::path& path, const CorpusManifest& m) {
  io::write_text(path, manifest_csv(m));
}

// ---------------------------------------------------------------------------
// Synthetic corpus

struct SynthSpec {
  int words = 20;
  int speakers = 5;
  int repetitions = 10;
  std::uint64_t seed = 7;
  int sample_rate_hz = 16000;
  // Every session reads the same seeded prompt list; otherwise each
  // (speaker, repetition) session gets its own word order.
  bool fixed_prompt_order = true;

  void validate() const {
    require(words >= 1 && speakers >= 1 && repetitions >= 1, ErrorCode::InvalidConfig,
            "synth: words, speakers and repetitions must be >= 1");
    require(sample_rate_hz >= 8000, ErrorCode::InvalidConfig, "synth: sample rate below 8 kHz");
  }
};

inline std::string synth_word_text(int index) {
  static constexpr std::array<const char*, 55> kWords = {
      "zero",    "one",      "two",     "three",    "four",    "five",    "six",       "seven",   "eight",
      "nine",    "alpha",    "bravo",   "charlie",  "delta",   "echo",    "foxtrot",   "golf",    "hotel",
      "india",   "juliet",   "kilo",    "lima",     "mike",    "november", "oscar",   "papa",      "quebec",
      "romeo",   "sierra",   "tango",   "uniform",  "victor",  "whiskey", "xray",      "yankee",  "zulu",
      "command", "delete",   "enter",   "escape",   "line",    "paragraph", "space",   "tab",     "up",
      "down",    "left",     "right",   "home",     "end",     "page",    "backspace", "shift",   "control",
      "alt"};
  if (index < static_cast<int>(kWords.size())) return kWords[static_cast<std::size_t>(index)];
  return "word" + std::to_string(index);
}

inline std::string synth_speaker_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%02d", index % 2 == 0 ? 'M' : 'F', index + 1);
  return buf;
}

inline Severity synth_severity(int speaker) {
  static constexpr Severity kCycle[3] = {Severity::High, Severity::Moderate, Severity::Mild};
  return kCycle[speaker % 3];
}

// Jitter and noise multiplier.
inline double severity_multiplier(Severity s) {
  switch (s) {
    case Severity::Mild: return 1.0;
    case Severity::Moderate: return 2.0;
    case Severity::High: return 3.0;
  }
  return 1.0;
}

struct SynthWord {
  std::array<double, 3> formants_hz{};
  std::array<double, 3> amplitudes{};
  double duration_s = 0.4;
};

// Formant triples are drawn without replacement from a Bark-spaced lattice
// (5 x 6 x 3 points), so every word has a distinct triple.
inline std::vector<SynthWord> synth_words(const SynthSpec& spec) {
  Rng rng(derive_seed(spec.seed, "words"));
  std::vector<std::array<int, 3>> lattice;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 6; ++j)
      for (int k = 0; k < 3; ++k) lattice.push_back({i, j, k});
  std::shuffle(lattice.begin(), lattice.end(), rng);

  std::vector<SynthWord> words(static_cast<std::size_t>(spec.words));
  for (std::size_t w = 0; w < words.size(); ++w) {
    std::array<double, 3> bark{};
    if (w < lattice.size()) {
      bark = {3.5 + 1.0 * lattice[w][0], 9.5 + 1.0 * lattice[w][1], 16.0 + 1.2 * lattice[w][2]};
    } else {
      bark = {3.5 + 4.0 * uniform01(rng), 9.5 + 5.0 * uniform01(rng), 16.0 + 2.4 * uniform01(rng)};
    }
    for (int f = 0; f < 3; ++f) {
      words[w].formants_hz[static_cast<std::size_t>(f)] = bark_to_hz(bark[static_cast<std::size_t>(f)]);
      words[w].amplitudes[static_cast<std::size_t>(f)] = 0.5 + 0.5 * uniform01(rng);
    }
    words[w].duration_s = 0.3 + 0.3 * uniform01(rng);
  }
  return words;
}

struct SynthSpeaker {
  std::string id;
  Severity severity = Severity::Mild;
  double frequency_scale = 1.0;
  double gain = 1.0;
};

inline SynthSpeaker synth_speaker(const SynthSpec& spec, int index) {
  Rng rng(derive_seed(spec.seed, {0x5350u, static_cast<std::uint64_t>(index)}));
  SynthSpeaker s;
  s.id = synth_speaker_id(index);
  s.severity = synth_severity(index);
  s.frequency_scale = 0.96 + 0.08 * uniform01(rng);
  s.gain = 0.7 + 0.6 * uniform01(rng);
  return s;
}

// One utterance: leading silence, three ramped sinusoids at the word's
// (speaker-scaled, jittered) formants with additive Gaussian noise, trailing
// silence. Its random stream depends only on (seed, speaker, word, repetition).
inline AudioSignal synth_utterance(const SynthSpec& spec, const SynthWord& word, const SynthSpeaker& speaker,
                                   int speaker_index, int word_index, int repetition) {
  Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(speaker_index), static_cast<std::uint64_t>(word_index),
                                  static_cast<std::uint64_t>(repetition)}));
  const double severity = severity_multiplier(speaker.severity);
  const double rate = spec.sample_rate_hz;
  auto jitter = [&] { return 1.0 + 0.02 * severity * (2.0 * uniform01(rng) - 1.0); };

  const double duration = word.duration_s * jitter();
  const double lead = 0.1 + 0.1 * uniform01(rng);
  const double trail = 0.1 + 0.1 * uniform01(rng);
  std::array<double, 3> freq{}, phase{};
  for (std::size_t f = 0; f < 3; ++f) {
    freq[f] = std::min(word.formants_hz[f] * speaker.frequency_scale * jitter(), 0.45 * rate);
    phase[f] = 2.0 * std::numbers::pi * uniform01(rng);
  }

  const auto n_lead = static_cast<std::size_t>(lead * rate);
  const auto n_voiced = static_cast<std::size_t>(duration * rate);
  const auto n_trail = static_cast<std::size_t>(trail * rate);
  const auto n_ramp = static_cast<std::size_t>(0.015 * rate);

  std::vector<double> voiced(n_voiced);
  double power = 0.0;
  for (std::size_t i = 0; i < n_voiced; ++i) {
    const double t = static_cast<double>(i) / rate;
    double s = 0.0;
    for (std::size_t f = 0; f < 3; ++f) s += word.amplitudes[f] * std::sin(2.0 * std::numbers::pi * freq[f] * t + phase[f]);
    double env = 1.0;
    if (i < n_ramp) env = static_cast<double>(i) / n_ramp;
    if (n_voiced - i <= n_ramp) env = std::min(env, static_cast<double>(n_voiced - i) / n_ramp);
    voiced[i] = s * env;
    power += voiced[i] * voiced[i];
  }
  const double rms = std::sqrt(power / std::max<double>(1.0, n_voiced));
  const double scale = 0.12 * speaker.gain / std::max(rms, 1e-12);
  const double signal_rms = 0.12 * speaker.gain;
  const double noise_sigma = signal_rms * severity * std::pow(10.0, -20.0 / 20.0);
  const double floor_sigma = signal_rms * std::pow(10.0, -60.0 / 20.0);

  AudioSignal sig;
  sig.sample_rate_hz = spec.sample_rate_hz;
  sig.samples.reserve(n_lead + n_voiced + n_trail);
  for (std::size_t i = 0; i < n_lead; ++i) sig.samples.push_back(gaussian(rng, floor_sigma));
  for (std::size_t i = 0; i < n_voiced; ++i) sig.samples.push_back(voiced[i] * scale + gaussian(rng, noise_sigma));
  for (std::size_t i = 0; i < n_trail; ++i) sig.samples.push_back(gaussian(rng, floor_sigma));
  for (auto& s : sig.samples) s = std::clamp(s, -1.0, 1.0);
  return sig;
}

// Sessions are recorded per (speaker, repetition), each reading the word list
// in prompt order. Returns the manifest; with out_dir set, also writes
// out_dir/audio/*.wav and out_dir/manifest.csv.
inline CorpusManifest synth_corpus(const SynthSpec& spec, const std::optional<std::filesystem::path>& out_dir) {
  spec.validate();
  const auto words = synth_words(spec);
  CorpusManifest m;
  for (int w = 0; w < spec.words; ++w) m.vocabulary.push_back(synth_word_text(w));

  if (out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*out_dir / "audio", ec);
    require(!ec, ErrorCode::IoError, "cannot create " + (*out_dir / "audio").string());
    m.base_dir = *out_dir;
  }

  for (int s = 0; s < spec.speakers; ++s) {
    const auto speaker = synth_speaker(spec, s);
    for (int rep = 0; rep < spec.repetitions; ++rep) {
      std::vector<int> order(static_cast<std::size_t>(spec.words));
      std::iota(order.begin(), order.end(), 0);
      Rng session(spec.fixed_prompt_order
                      ? derive_seed(spec.seed, "prompts")
                      : derive_seed(spec.seed, {0x5345u, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(rep)}));
      std::shuffle(order.begin(), order.end(), session);
      for (int w : order) {
        char name[64];
        std::snprintf(name, sizeof name, "audio/%s_w%03d_r%02d.wav", speaker.id.c_str(), w, rep);
        UtteranceRecord r{speaker.id, speaker.severity, w, m.vocabulary[static_cast<std::size_t>(w)], rep, name,
                          Split::None};
        if (out_dir)
          write_wav(*out_dir / r.audio_path,
                    synth_utterance(spec, words[static_cast<std::size_t>(w)], speaker, s, w, rep));
        m.records.push_back(std::move(r));
      }
    }
  }
  if (out_dir) save_manifest(*out_dir / "manifest.csv", m);
  return m;
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitConfig {
  double train_fraction = 0.8;
  // Share of each group's training repetitions moved to dev (at least one
  // when > 0, never the last training repetition).
  double dev_fraction = 0.0;
  std::uint64_t seed = 7;
};

// Per (speaker, word): floor(n * train_fraction) training repetitions,
// clamped to [1, n - 1]; the rest are test.
inline CorpusManifest split_corpus(CorpusManifest m, const SplitConfig& cfg) {
  require(cfg.train_fraction > 0 && cfg.train_fraction < 1, ErrorCode::InvalidConfig,
          "split: train_fraction must lie in (0, 1)");
  require(cfg.dev_fraction >= 0 && cfg.dev_fraction < 1, ErrorCode::InvalidConfig,
          "split: dev_fraction must lie in [0, 1)");
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
  std::vector<std::pair<std::string, int>> group_order;
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto key = std::make_pair(m.records[i].speaker_id, m.records[i].word_id);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) group_order.push_back(key);
    it->second.push_back(i);
  }
  for (const auto& key : group_order) {
    auto idx = groups[key];
    const std::size_t n = idx.size();
    require(n >= 2, ErrorCode::TooFewRepetitions,
            key.first + "/" + std::to_string(key.second) + " has " + std::to_string(n) + " repetition(s)");
    std::size_t n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * cfg.train_fraction + 1e-9));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    std::size_t n_dev = 0;
    if (cfg.dev_fraction > 0 && n_train >= 2) {
      n_dev = static_cast<std::size_t>(std::floor(static_cast<double>(n_train) * cfg.dev_fraction + 1e-9));
      n_dev = std::clamp<std::size_t>(n_dev, 1, n_train - 1);
    }
    Rng rng(derive_seed(cfg.seed, key.first + "/" + std::to_string(key.second)));
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t j = 0; j < n; ++j) {
      Split s = Split::Test;
      if (j < n_train - n_dev) s = Split::Train;
      else if (j < n_train) s = Split::Dev;
      m.records[idx[j]].split = s;
    }
  }
  return m;
}

// Label sequences per speaker (manifest order) restricted to one split.
struct SpeakerSequence {
  std::string speaker_id;
  std::vector<std::size_t> record_indices;
};

inline std::vector<SpeakerSequence> sequences_by_speaker(const CorpusManifest& m, Split split) {
  std::vector<SpeakerSequence> out;
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& r = m.records[i];
    if (r.split != split) continue;
    auto [it, inserted] = slot.try_emplace(r.speaker_id, out.size());
    if (inserted) out.push_back({r.speaker_id, {}});
    out[it->second].record_indices.push_back(i);
  }
  return out;
}

}  // namespace asrlab
