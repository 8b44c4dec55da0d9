#pragma once

// Word Recognition Accuracy, per-speaker scoring, and the comparison tables
// (CSV or aligned text) with an optional SVG bar chart.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "asrlab/corpus.hpp"
#include "asrlab/error.hpp"
#include "asrlab/serialize.hpp"

namespace asrlab {

// WRA(%) = (W_TOT - W_err) / W_TOT * 100
inline double wra(long long total, long long errors) {
  require(total >= 1 && errors >= 0 && errors <= total, ErrorCode::InvalidCounts,
          "wra: need total >= 1 and 0 <= errors <= total (got " + std::to_string(total) + ", " +
              std::to_string(errors) + ")");
  return static_cast<double>(total - errors) / static_cast<double>(total) * 100.0;
}

// Two decimals, halves rounded away from zero.
inline std::string format_percent(double value) {
  const double scaled = value * 100.0;
  // Nudge values that sit a rounding error below an exact half.
  const double rounded = std::round(scaled + std::copysign(1e-9, scaled)) / 100.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", rounded);
  return buf;
}

struct EvalRow {
  std::string speaker_id;
  std::optional<Severity> severity;
  long long total_words = 0;
  long long errors = 0;

  double wra_percent() const { return wra(total_words, errors); }
};

struct StageTiming {
  double som_seconds = 0.0;
  double mlp_seconds = 0.0;
  double total_seconds = 0.0;
};

struct EvalReport {
  std::string system_name;
  std::vector<EvalRow> rows;
  EvalRow totals{"Total", std::nullopt, 0, 0};
  std::optional<StageTiming> timing;

  void recompute_totals() {
    totals = {"Total", std::nullopt, 0, 0};
    for (const auto& r : rows) {
      totals.total_words += r.total_words;
      totals.errors += r.errors;
    }
  }
};

inline EvalReport make_report(std::string system_name, std::vector<EvalRow> rows) {
  EvalReport rep;
  rep.system_name = std::move(system_name);
  for (const auto& r : rows) (void)r.wra_percent();  // validates counts
  rep.rows = std::move(rows);
  rep.recompute_totals();
  return rep;
}

struct ScoredDecode {
  std::string utterance_id;
  int predicted_word = 0;
};

// Speaker rows follow the speakers' first appearance in the manifest.
inline EvalReport score_decodes(std::span<const ScoredDecode> decodes, const CorpusManifest& manifest,
                                std::string system_name) {
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) by_id.emplace(manifest.records[i].utterance_id(), i);

  std::map<std::string, std::pair<long long, long long>> counts;
  for (const auto& d : decodes) {
    const auto it = by_id.find(d.utterance_id);
    require(it != by_id.end(), ErrorCode::UnknownUtterance, "utterance '" + d.utterance_id + "' not in manifest");
    const auto& rec = manifest.records[it->second];
    auto& c = counts[rec.speaker_id];
    c.first += 1;
    c.second += d.predicted_word == rec.word_id ? 0 : 1;
  }

  std::vector<EvalRow> rows;
  for (const auto& rec : manifest.records) {
    const auto it = counts.find(rec.speaker_id);
    if (it == counts.end()) continue;
    if (std::any_of(rows.begin(), rows.end(), [&](const EvalRow& r) { return r.speaker_id == rec.speaker_id; }))
      continue;
    rows.push_back({rec.speaker_id, rec.severity, it->second.first, it->second.second});
  }
  return make_report(std::move(system_name), std::move(rows));
}

inline std::vector<EvalRow> severity_breakdown(const EvalReport& report) {
  std::vector<EvalRow> out;
  for (Severity s : {Severity::High, Severity::Moderate, Severity::Mild}) {
    EvalRow row{to_string(s), s, 0, 0};
    for (const auto& r : report.rows)
      if (r.severity == s) {
        row.total_words += r.total_words;
        row.errors += r.errors;
      }
    if (row.total_words > 0) out.push_back(row);
  }
  return out;
}

enum class ReportFormat { Csv, Text };

namespace detail {

inline void check_same_speakers(std::span<const EvalReport> reports) {
  require(!reports.empty(), ErrorCode::PreconditionFailed, "render_report: no reports");
  const auto& ref = reports.front().rows;
  for (const auto& rep : reports) {
    require(rep.rows.size() == ref.size(), ErrorCode::MismatchedSpeakers,
            rep.system_name + " has a different speaker set");
    for (std::size_t i = 0; i < ref.size(); ++i)
      require(rep.rows[i].speaker_id == ref[i].speaker_id && rep.rows[i].total_words == ref[i].total_words,
              ErrorCode::MismatchedSpeakers, rep.system_name + " differs at speaker " + ref[i].speaker_id);
  }
}

inline std::string render_table(const std::vector<std::vector<std::string>>& cells, ReportFormat format) {
  std::string out;
  if (format == ReportFormat::Csv) {
    for (const auto& row : cells) {
      for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + row[c];
      out += '\n';
    }
    return out;
  }
  std::vector<std::size_t> width;
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (width.size() <= c) width.push_back(0);
      width[c] = std::max(width[c], row[c].size());
    }
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(width[c] - row[c].size(), ' ');
      line += c == 0 ? row[c] + pad : "  " + pad + row[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  }
  return out;
}

inline std::string format_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", s);
  return buf;
}

}  // namespace detail

// Side-by-side per-speaker table: speaker, severity, total words, one error
// column per system, one WRA column per system, then a totals row. With
// include_timing, a second table (after a blank line) lists per-stage
// training times and total WRA for each system that carries timing.
inline std::string render_report(std::span<const EvalReport> reports, ReportFormat format,
                                 bool include_timing = false) {
  detail::check_same_speakers(reports);
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = {"speaker", "severity", "total_words"};
  for (const auto& r : reports) header.push_back("errors_" + r.system_name);
  for (const auto& r : reports) header.push_back("wra_" + r.system_name);
  cells.push_back(header);

  auto emit = [&](auto row_of) {
    const EvalRow& first = row_of(reports.front());
    std::vector<std::string> row = {first.speaker_id, first.severity ? to_string(*first.severity) : "",
                                    std::to_string(first.total_words)};
    for (const auto& r : reports) row.push_back(std::to_string(row_of(r).errors));
    for (const auto& r : reports) row.push_back(format_percent(row_of(r).wra_percent()));
    cells.push_back(std::move(row));
  };
  for (std::size_t i = 0; i < reports.front().rows.size(); ++i)
    emit([i](const EvalReport& r) -> const EvalRow& { return r.rows[i]; });
  emit([](const EvalReport& r) -> const EvalRow& { return r.totals; });

  std::string out = detail::render_table(cells, format);
  if (include_timing) {
    std::vector<std::vector<std::string>> timing = {
        {"system", "som_seconds", "mlp_seconds", "total_seconds", "wra"}};
    for (const auto& r : reports) {
      if (!r.timing) continue;
      timing.push_back({r.system_name, detail::format_seconds(r.timing->som_seconds),
                        detail::format_seconds(r.timing->mlp_seconds), detail::format_seconds(r.timing->total_seconds),
                        format_percent(r.totals.wra_percent())});
    }
    out += '\n' + detail::render_table(timing, format);
  }
  return out;
}

// Inverse of the CSV form of render_report (counts only; timing ignored).
inline std::vector<EvalReport> parse_report_csv(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    lines.push_back(text.substr(start, nl == std::string::npos ? std::string::npos : nl - start));
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  require(!lines.empty(), ErrorCode::ParseError, "report: empty");
  const auto header = io::split_csv(lines[0]);
  require(header.size() >= 5 && (header.size() - 3) % 2 == 0 && header[0] == "speaker", ErrorCode::ParseError,
          "report: unexpected header");
  const std::size_t n_sys = (header.size() - 3) / 2;
  std::vector<EvalReport> reports(n_sys);
  for (std::size_t s = 0; s < n_sys; ++s) {
    const auto& col = header[3 + s];
    require(col.rfind("errors_", 0) == 0, ErrorCode::ParseError, "report: bad column " + col);
    reports[s].system_name = col.substr(7);
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) break;
    const auto f = io::split_csv(lines[i]);
    require(f.size() == header.size(), ErrorCode::ParseError, "report: ragged row " + std::to_string(i + 1));
    if (f[0] == "Total") continue;
    const auto total = io::parse_int(f[2], "report total_words");
    for (std::size_t s = 0; s < n_sys; ++s)
      reports[s].rows.push_back({f[0], parse_severity(f[1]), total, io::parse_int(f[3 + s], "report errors")});
  }
  for (auto& r : reports) r.recompute_totals();
  return reports;
}

// Grouped bars of per-speaker WRA, one colour per system.
inline std::string render_svg(std::span<const EvalReport> reports) {
  detail::check_same_speakers(reports);
  static constexpr const char* kColors[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759",
                                            "#76b7b2", "#edc948", "#b07aa1", "#9c755f"};
  const std::size_t n_speakers = reports.front().rows.size() + 1;
  const std::size_t n_sys = reports.size();
  const double bar = 10.0, gap = 14.0, left = 50.0, top = 20.0, height = 240.0;
  const double group = bar * static_cast<double>(n_sys) + gap;
  const double width = left + group * static_cast<double>(n_speakers) + 160.0;
  double lo = 100.0;
  for (const auto& r : reports) {
    for (const auto& row : r.rows) lo = std::min(lo, row.wra_percent());
    lo = std::min(lo, r.totals.wra_percent());
  }
  lo = std::max(0.0, std::floor(lo / 10.0) * 10.0 - 10.0);
  auto y_of = [&](double v) { return top + height * (100.0 - v) / (100.0 - lo); };

  char buf[256];
  std::string svg;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" font-family=\"sans-serif\" "
                "font-size=\"10\">\n",
                width, top + height + 50.0);
  svg += buf;
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = lo + (100.0 - lo) * tick / 4.0;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/><text x=\"4\" y=\"%.1f\">%.1f</text>\n",
                  left, y_of(v), width - 160.0, y_of(v), y_of(v) + 3.0, v);
    svg += buf;
  }
  for (std::size_t sp = 0; sp < n_speakers; ++sp) {
    const double x0 = left + group * static_cast<double>(sp) + gap / 2.0;
    for (std::size_t s = 0; s < n_sys; ++s) {
      const auto& row = sp + 1 < n_speakers ? reports[s].rows[sp] : reports[s].totals;
      const double v = row.wra_percent();
      std::snprintf(buf, sizeof buf,
                    "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"%s\"><title>%s %s %s</title></rect>\n",
                    x0 + bar * static_cast<double>(s), y_of(v), bar, top + height - y_of(v), kColors[s % 8],
                    reports[s].system_name.c_str(), row.speaker_id.c_str(), format_percent(v).c_str());
      svg += buf;
    }
    const auto& label = sp + 1 < n_speakers ? reports.front().rows[sp].speaker_id : std::string("Total");
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\">%s</text>\n", x0, top + height + 14.0, label.c_str());
    svg += buf;
  }
  for (std::size_t s = 0; s < n_sys; ++s) {
    const double y = top + 14.0 * static_cast<double>(s);
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"10\" height=\"10\" fill=\"%s\"/><text x=\"%.1f\" y=\"%.1f\">%s</text>\n",
                  width - 150.0, y, kColors[s % 8], width - 135.0, y + 9.0, reports[s].system_name.c_str());
    svg += buf;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace asrlab
