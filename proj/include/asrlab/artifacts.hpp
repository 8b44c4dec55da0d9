#pragma once

// Feature, posterior and decode CSV files exchanged between pipeline stages.

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "asrlab/corpus.hpp"
#include "asrlab/error.hpp"
#include "asrlab/frontend.hpp"
#include "asrlab/linalg.hpp"
#include "asrlab/serialize.hpp"

namespace asrlab {

struct FeatureSet {
  std::vector<std::string> ids;
  std::vector<int> n_valid_frames;
  Matrix values;  // one row per utterance
  int n_cepstra = 13;
  int target_frames = 0;

  std::size_t size() const { return ids.size(); }

  std::size_t index_of(const std::string& id) const {
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == id) return i;
    fail(ErrorCode::UnknownUtterance, "no features for utterance '" + id + "'");
  }

  std::map<std::string, std::size_t> index() const {
    std::map<std::string, std::size_t> out;
    for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], i);
    return out;
  }

  // Rows for the given manifest records, in that order.
  Matrix rows_for(const CorpusManifest& m, const std::vector<std::size_t>& record_indices) const {
    const auto idx = index();
    Matrix out(0, values.cols());
    for (std::size_t r : record_indices) {
      const auto id = m.records[r].utterance_id();
      const auto it = idx.find(id);
      require(it != idx.end(), ErrorCode::UnknownUtterance, "no features for utterance '" + id + "'");
      out.append_row(values.row(it->second));
    }
    return out;
  }

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

// Analyses every manifest utterance. When cfg.target_frames is 0 the padded
// length is the longest trimmed training utterance (all utterances if no
// split has been assigned).
inline FeatureSet extract_features(const CorpusManifest& manifest, const FrontendConfig& cfg) {
  cfg.validate();
  std::vector<std::vector<std::vector<double>>> cepstra;
  cepstra.reserve(manifest.records.size());
  const bool has_train = std::any_of(manifest.records.begin(), manifest.records.end(),
                                     [](const UtteranceRecord& r) { return r.split == Split::Train; });
  std::size_t longest = 0;
  for (const auto& rec : manifest.records) {
    cepstra.push_back(extract_cepstra(read_wav(manifest.resolve(rec)), cfg));
    if (!has_train || rec.split == Split::Train) longest = std::max(longest, cepstra.back().size());
  }
  FeatureSet fs;
  fs.n_cepstra = cfg.n_cepstra;
  fs.target_frames = cfg.target_frames > 0 ? cfg.target_frames : static_cast<int>(std::max<std::size_t>(longest, 1));
  fs.values = Matrix(0, static_cast<std::size_t>(fs.n_cepstra * fs.target_frames));
  for (std::size_t i = 0; i < cepstra.size(); ++i) {
    const auto u = assemble_utterance(cepstra[i], fs.n_cepstra, fs.target_frames);
    fs.ids.push_back(manifest.records[i].utterance_id());
    fs.n_valid_frames.push_back(u.n_valid_frames);
    fs.values.append_row(u.values);
  }
  return fs;
}

// utterance_id, n_valid_frames, then f<frame>_c<coef> values frame-major.
inline std::string features_csv(const FeatureSet& fs) {
  std::string out = "utterance_id,n_valid_frames";
  for (int f = 0; f < fs.target_frames; ++f)
    for (int c = 0; c < fs.n_cepstra; ++c) out += ",f" + std::to_string(f) + "_c" + std::to_string(c);
  out += '\n';
  for (std::size_t i = 0; i < fs.size(); ++i) {
    out += fs.ids[i] + ',' + std::to_string(fs.n_valid_frames[i]);
    for (double v : fs.values.row(i)) out += ',' + io::format_double(v);
    out += '\n';
  }
  return out;
}

inline FeatureSet load_features(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  require(!lines.empty(), ErrorCode::ParseError, path.string() + ": empty features file");
  const auto header = io::split_csv(lines[0]);
  require(header.size() >= 3 && header[0] == "utterance_id" && header[1] == "n_valid_frames", ErrorCode::ParseError,
          path.string() + ": bad features header");
  FeatureSet fs;
  const auto last = header.back();
  const auto cpos = last.find("_c");
  require(last.size() > 1 && last[0] == 'f' && cpos != std::string::npos, ErrorCode::ParseError,
          path.string() + ": bad feature column name " + last);
  fs.target_frames = static_cast<int>(io::parse_int(last.substr(1, cpos - 1), path.string())) + 1;
  fs.n_cepstra = static_cast<int>(io::parse_int(last.substr(cpos + 2), path.string())) + 1;
  const std::size_t dim = header.size() - 2;
  require(dim == static_cast<std::size_t>(fs.target_frames * fs.n_cepstra), ErrorCode::ParseError,
          path.string() + ": feature columns do not form a frames x cepstra grid");
  fs.values = Matrix(0, dim);
  std::vector<double> row(dim);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    const auto f = io::split_csv(lines[i]);
    require(f.size() == header.size(), ErrorCode::ParseError, where + ": wrong field count");
    fs.ids.push_back(f[0]);
    fs.n_valid_frames.push_back(static_cast<int>(io::parse_int(f[1], where)));
    for (std::size_t d = 0; d < dim; ++d) row[d] = io::parse_double(f[d + 2], where);
    fs.values.append_row(row);
  }
  return fs;
}

struct PosteriorTable {
  std::vector<std::string> ids;
  Matrix posteriors;
};

inline std::string posteriors_csv(const PosteriorTable& t) {
  std::string out = "utterance_id";
  for (std::size_t q = 0; q < t.posteriors.cols(); ++q) out += ",p" + std::to_string(q);
  out += '\n';
  for (std::size_t i = 0; i < t.ids.size(); ++i) {
    out += t.ids[i];
    for (double p : t.posteriors.row(i)) out += ',' + io::format_double(p);
    out += '\n';
  }
  return out;
}

inline PosteriorTable load_posteriors(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  require(!lines.empty(), ErrorCode::ParseError, path.string() + ": empty posteriors file");
  const auto header = io::split_csv(lines[0]);
  require(header.size() >= 2 && header[0] == "utterance_id", ErrorCode::ParseError,
          path.string() + ": bad posteriors header");
  PosteriorTable t;
  t.posteriors = Matrix(0, header.size() - 1);
  std::vector<double> row(header.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = io::split_csv(lines[i]);
    require(f.size() == header.size(), ErrorCode::ParseError, path.string() + ": wrong field count");
    t.ids.push_back(f[0]);
    for (std::size_t q = 0; q < row.size(); ++q) row[q] = io::parse_double(f[q + 1], path.string());
    t.posteriors.append_row(row);
  }
  return t;
}

struct DecodedUtterance {
  std::string utterance_id;
  int word_id = 0;
  std::string word_text;
  double log_score = 0.0;
};

inline std::string decoded_csv(const std::vector<DecodedUtterance>& rows) {
  std::string out = "utterance_id,word_id,word_text,log_score\n";
  for (const auto& r : rows)
    out += r.utterance_id + ',' + std::to_string(r.word_id) + ',' + r.word_text + ',' + io::format_double(r.log_score) +
           '\n';
  return out;
}

inline std::vector<DecodedUtterance> load_decoded(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  require(!lines.empty() && lines[0] == "utterance_id,word_id,word_text,log_score", ErrorCode::ParseError,
          path.string() + ": bad decoded header");
  std::vector<DecodedUtterance> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = io::split_csv(lines[i]);
    require(f.size() == 4, ErrorCode::ParseError, path.string() + ": wrong field count");
    out.push_back({f[0], static_cast<int>(io::parse_int(f[1], path.string())), f[2],
                   io::parse_double(f[3], path.string())});
  }
  return out;
}

}  // namespace asrlab
