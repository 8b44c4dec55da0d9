#include <gtest/gtest.h>

#include <sstream>

#include "asrlab/eval.hpp"

using namespace asrlab;

namespace {

struct PublishedRow {
  const char* speaker;
  Severity severity;
  long long total;
  long long errors[3];
  double printed[3];
};

// Published per-speaker error counts and the percentages printed beside them.
constexpr PublishedRow kBase[] = {
    {"F02", Severity::High, 5355, {77, 142, 199}, {98.56, 97.35, 96.28}},
    {"F03", Severity::High, 5355, {69, 119, 137}, {98.71, 97.78, 97.44}},
    {"F04", Severity::Moderate, 5355, {106, 148, 306}, {98.02, 97.24, 94.29}},
    {"F05", Severity::Mild, 5348, {262, 515, 629}, {95.1, 90.37, 88.24}},
    {"M01", Severity::High, 2805, {43, 71, 118}, {98.47, 97.47, 95.79}},
    {"M04", Severity::High, 3825, {56, 106, 135}, {98.54, 97.23, 96.47}},
    {"M05", Severity::Moderate, 5355, {61, 129, 202}, {98.86, 97.59, 96.23}},
    {"M07", Severity::High, 5355, {77, 152, 203}, {98.56, 97.16, 96.21}},
    {"M08", Severity::Mild, 5355, {94, 177, 252}, {98.24, 96.69, 95.29}},
    {"M09", Severity::Mild, 5355, {89, 188, 258}, {98.34, 96.49, 95.18}},
    {"M10", Severity::Mild, 5354, {181, 392, 475}, {96.62, 92.68, 91.13}},
    {"M11", Severity::Moderate, 4590, {62, 141, 172}, {98.65, 96.93, 96.25}},
    {"M12", Severity::High, 4590, {56, 86, 106}, {98.78, 98.13, 97.69}},
    {"M14", Severity::Mild, 5355, {97, 219, 322}, {98.19, 95.91, 93.99}},
    {"M16", Severity::High, 4590, {123, 217, 324}, {97.32, 95.27, 92.94}},
};
constexpr double kBaseTotals[3] = {98.03, 96.21, 94.81};

constexpr PublishedRow kGa[] = {
    {"F02", Severity::High, 5355, {77, 100, 180}, {98.56, 98.13, 96.64}},
    {"F03", Severity::High, 5355, {60, 100, 100}, {98.88, 98.13, 98.13}},
    {"F04", Severity::Moderate, 5355, {100, 110, 290}, {98.13, 97.95, 94.58}},
    {"F05", Severity::Mild, 5348, {213, 490, 620}, {96.02, 90.84, 88.41}},
    {"M01", Severity::High, 2805, {40, 67, 90}, {98.57, 97.61, 96.79}},
    {"M04", Severity::High, 3825, {56, 87, 100}, {98.54, 97.73, 97.39}},
    {"M05", Severity::Moderate, 5355, {56, 99, 200}, {98.95, 98.15, 96.27}},
    {"M07", Severity::High, 5355, {55, 123, 200}, {98.97, 97.70, 96.27}},
    {"M08", Severity::Mild, 5355, {85, 154, 200}, {98.41, 97.12, 96.27}},
    {"M09", Severity::Mild, 5355, {80, 164, 240}, {98.51, 96.94, 95.52}},
    {"M10", Severity::Mild, 5354, {150, 385, 420}, {97.20, 92.81, 92.16}},
    {"M11", Severity::Moderate, 4590, {60, 110, 125}, {98.69, 97.60, 97.28}},
    {"M12", Severity::High, 4590, {53, 88, 79}, {98.85, 98.08, 98.28}},
    {"M14", Severity::Mild, 5355, {88, 196, 280}, {98.36, 96.34, 94.77}},
    {"M16", Severity::High, 4590, {102, 187, 295}, {97.78, 95.93, 93.57}},
};
constexpr double kGaTotals[3] = {98.28, 96.67, 95.38};

template <std::size_t N>
std::vector<EvalReport> reports_from(const PublishedRow (&rows)[N], const std::array<std::string, 3>& names) {
  std::vector<EvalReport> out;
  for (std::size_t s = 0; s < 3; ++s) {
    std::vector<EvalRow> r;
    for (const auto& p : rows) r.push_back({p.speaker, p.severity, p.total, p.errors[s]});
    out.push_back(make_report(names[s], r));
  }
  return out;
}

// Column `col` of every data row of a CSV table (stops at the first blank line).
std::vector<std::string> csv_column(const std::string& text, std::size_t col) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line) && !line.empty()) out.push_back(io::split_csv(line).at(col));
  return out;
}

template <std::size_t N>
void check_published(const PublishedRow (&rows)[N], const double (&totals)[3], const std::array<std::string, 3>& names) {
  const auto reports = reports_from(rows, names);
  const auto csv = render_report(reports, ReportFormat::Csv);
  for (std::size_t s = 0; s < 3; ++s) {
    const auto wra_col = csv_column(csv, 6 + s);
    ASSERT_EQ(wra_col.size(), N + 1);
    for (std::size_t i = 0; i < N; ++i)
      EXPECT_NEAR(std::stod(wra_col[i]), rows[i].printed[s], 0.01 + 1e-9) << names[s] << " " << rows[i].speaker;
    EXPECT_EQ(wra_col[N], format_percent(totals[s])) << names[s] << " total";
  }
}

CorpusManifest three_utterances() {
  CorpusManifest m;
  m.vocabulary = {"up", "down"};
  m.records = {{"F02", Severity::High, 0, "up", 0, "a/u1.wav", Split::Test},
               {"F02", Severity::High, 1, "down", 0, "a/u2.wav", Split::Test},
               {"F02", Severity::High, 0, "up", 1, "a/u3.wav", Split::Test}};
  return m;
}

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::PreconditionFailed;
}

}  // namespace

TEST(Wra, PublishedTotals) {
  EXPECT_EQ(format_percent(wra(73942, 1453)), "98.03");
  EXPECT_EQ(format_percent(wra(73942, 1275)), "98.28");
  EXPECT_EQ(format_percent(wra(5355, 77)), "98.56");
}

TEST(Wra, ZeroErrorsIsHundred) {
  for (long long n : {1LL, 7LL, 73942LL}) EXPECT_EQ(wra(n, 0), 100.0);
}

TEST(Wra, InvalidCounts) {
  EXPECT_EQ(code_of([] { wra(0, 0); }), ErrorCode::InvalidCounts);
  EXPECT_EQ(code_of([] { wra(5, 6); }), ErrorCode::InvalidCounts);
  EXPECT_EQ(code_of([] { wra(5, -1); }), ErrorCode::InvalidCounts);
}

TEST(Wra, ScaleInvariant) {
  for (long long t = 1; t <= 40; ++t)
    for (long long e = 0; e <= t; ++e)
      for (long long k : {2LL, 3LL, 17LL}) ASSERT_NEAR(wra(k * t, k * e), wra(t, e), 1e-12);
}

TEST(Wra, FormatRoundsHalfAwayFromZero) {
  EXPECT_EQ(format_percent(0.125), "0.13");
  EXPECT_EQ(format_percent(-0.125), "-0.13");
  EXPECT_EQ(format_percent(2.675), "2.68");  // stored just below the half
  EXPECT_EQ(format_percent(200.0 / 3.0), "66.67");
  EXPECT_EQ(format_percent(100.0), "100.00");
}

TEST(Score, OneWrongOfThree) {
  const auto m = three_utterances();
  const std::vector<ScoredDecode> d = {{"u1", 0}, {"u2", 0}, {"u3", 0}};
  const auto rep = score_decodes(d, m, "sys16");
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_EQ(rep.rows[0].total_words, 3);
  EXPECT_EQ(rep.rows[0].errors, 1);
  EXPECT_NEAR(rep.rows[0].wra_percent(), 66.67, 0.01);
  EXPECT_EQ(rep.rows[0].severity, Severity::High);
}

TEST(Score, AllCorrect) {
  const auto m = three_utterances();
  const std::vector<ScoredDecode> d = {{"u1", 0}, {"u2", 1}, {"u3", 0}};
  const auto rep = score_decodes(d, m, "x");
  EXPECT_EQ(format_percent(rep.rows[0].wra_percent()), "100.00");
  EXPECT_EQ(format_percent(rep.totals.wra_percent()), "100.00");
}

TEST(Score, UnknownUtterance) {
  const auto m = three_utterances();
  const std::vector<ScoredDecode> d = {{"u9", 0}};
  EXPECT_EQ(code_of([&] { score_decodes(d, m, "x"); }), ErrorCode::UnknownUtterance);
}

TEST(Score, SpeakersInManifestOrder) {
  CorpusManifest m;
  m.vocabulary = {"a"};
  m.records = {{"M05", Severity::Moderate, 0, "a", 0, "p.wav", Split::Test},
               {"F02", Severity::High, 0, "a", 0, "q.wav", Split::Test},
               {"M01", Severity::Mild, 0, "a", 0, "r.wav", Split::Test}};
  const std::vector<ScoredDecode> d = {{"r", 0}, {"p", 0}};
  const auto rep = score_decodes(d, m, "x");
  ASSERT_EQ(rep.rows.size(), 2u);
  EXPECT_EQ(rep.rows[0].speaker_id, "M05");
  EXPECT_EQ(rep.rows[1].speaker_id, "M01");
}

TEST(Report, F02Row) {
  const auto rep = make_report("sys16", {{"F02", Severity::High, 5355, 77}});
  EXPECT_EQ(format_percent(rep.rows[0].wra_percent()), "98.56");
}

TEST(Report, TotalsArePooledNotAveraged) {
  const auto rep = make_report("s", {{"A", Severity::High, 10, 5}, {"B", Severity::Mild, 90, 0}});
  EXPECT_EQ(rep.totals.total_words, 100);
  EXPECT_EQ(rep.totals.errors, 5);
  EXPECT_DOUBLE_EQ(rep.totals.wra_percent(), 95.0);  // the mean of rows would be 75
}

TEST(Report, RejectsBadRow) {
  EXPECT_EQ(code_of([] { make_report("s", {{"A", std::nullopt, 3, 4}}); }), ErrorCode::InvalidCounts);
}

TEST(Report, SeverityBreakdown) {
  const auto reps = reports_from(kBase, {"sys16", "sys32", "sys128"});
  const auto by_sev = severity_breakdown(reps[0]);
  ASSERT_EQ(by_sev.size(), 3u);
  long long total = 0, errors = 0;
  for (const auto& r : by_sev) {
    total += r.total_words;
    errors += r.errors;
  }
  EXPECT_EQ(total, 73942);
  EXPECT_EQ(errors, 1453);
  EXPECT_EQ(by_sev[0].speaker_id, "High");
}

TEST(Render, SingleReportColumns) {
  const std::vector<EvalReport> reps = {make_report("sys16", {{"F02", Severity::High, 4, 1}})};
  EXPECT_EQ(render_report(reps, ReportFormat::Csv),
            "speaker,severity,total_words,errors_sys16,wra_sys16\n"
            "F02,High,4,1,75.00\n"
            "Total,,4,1,75.00\n");
}

TEST(Render, AlignedText) {
  const std::vector<EvalReport> reps = {make_report("a", {{"F02", Severity::High, 400, 1}, {"M1", Severity::Mild, 4, 0}})};
  const auto text = render_report(reps, ReportFormat::Text);
  std::istringstream in(text);
  std::string line;
  std::vector<std::size_t> lengths;
  while (std::getline(in, line)) lengths.push_back(line.size());
  ASSERT_EQ(lengths.size(), 4u);
  // Right-aligned last column: every line ends at the same width.
  for (auto l : lengths) EXPECT_EQ(l, lengths[0]);
}

TEST(Render, PublishedBaseTableReproduced) { check_published(kBase, kBaseTotals, {"sys16", "sys32", "sys128"}); }

TEST(Render, PublishedGaTableReproduced) {
  check_published(kGa, kGaTotals, {"sys16+GA", "sys32+GA", "sys128+GA"});
}

TEST(Render, PublishedTotalsMatchColumnSums) {
  const auto base = reports_from(kBase, {"a", "b", "c"});
  const auto ga = reports_from(kGa, {"a", "b", "c"});
  EXPECT_EQ(base[0].totals.total_words, 73942);
  EXPECT_EQ(base[0].totals.errors, 1453);
  EXPECT_EQ(base[1].totals.errors, 2802);
  EXPECT_EQ(base[2].totals.errors, 3838);
  EXPECT_EQ(ga[0].totals.errors, 1275);
  EXPECT_EQ(ga[1].totals.errors, 2460);
  EXPECT_EQ(ga[2].totals.errors, 3419);
}

TEST(Render, CsvRoundTrip) {
  auto reps = reports_from(kGa, {"sys16+GA", "sys32+GA", "sys128+GA"});
  reps[0].timing = StageTiming{1.5, 2.5, 4.0};
  const auto parsed = parse_report_csv(render_report(reps, ReportFormat::Csv, true));
  ASSERT_EQ(parsed.size(), 3u);
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_EQ(parsed[s].system_name, reps[s].system_name);
    ASSERT_EQ(parsed[s].rows.size(), reps[s].rows.size());
    for (std::size_t i = 0; i < reps[s].rows.size(); ++i) {
      EXPECT_EQ(parsed[s].rows[i].speaker_id, reps[s].rows[i].speaker_id);
      EXPECT_EQ(parsed[s].rows[i].severity, reps[s].rows[i].severity);
      EXPECT_EQ(parsed[s].rows[i].total_words, reps[s].rows[i].total_words);
      EXPECT_EQ(parsed[s].rows[i].errors, reps[s].rows[i].errors);
    }
    EXPECT_EQ(parsed[s].totals.errors, reps[s].totals.errors);
  }
}

TEST(Render, TimingTable) {
  std::vector<EvalReport> reps = {make_report("sys16", {{"F02", Severity::High, 4, 0}})};
  reps[0].timing = StageTiming{1.25, 2.0, 3.5};
  const auto csv = render_report(reps, ReportFormat::Csv, true);
  EXPECT_NE(csv.find("\nsystem,som_seconds,mlp_seconds,total_seconds,wra\nsys16,1.250,2.000,3.500,100.00\n"),
            std::string::npos)
      << csv;
}

TEST(Render, MismatchedSpeakers) {
  const std::vector<EvalReport> reps = {make_report("a", {{"F02", Severity::High, 4, 0}}),
                                        make_report("b", {{"M01", Severity::High, 4, 0}})};
  EXPECT_EQ(code_of([&] { render_report(reps, ReportFormat::Csv); }), ErrorCode::MismatchedSpeakers);
  EXPECT_EQ(code_of([&] { render_svg(reps); }), ErrorCode::MismatchedSpeakers);
}

TEST(Render, SvgHasOneBarPerSpeakerAndSystem) {
  const auto reps = reports_from(kBase, {"sys16", "sys32", "sys128"});
  const auto svg = render_svg(reps);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  std::size_t bars = 0;
  for (std::size_t p = svg.find("<rect"); p != std::string::npos; p = svg.find("<rect", p + 1)) ++bars;
  EXPECT_GE(bars, 16u * 3u);  // 15 speakers plus the total, three systems
  EXPECT_NE(svg.find("M16"), std::string::npos);
}
