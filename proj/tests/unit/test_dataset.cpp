#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dtscr/dataset.hpp"
#include "dtscr/error.hpp"
#include "dtscr/io.hpp"

namespace dtscr {
namespace {

// Three subjects over three periods: censored at 2, cause 1 at 2, cause 2 at 3.
Dataset toy() {
  Eigen::MatrixXd z(3, 1);
  z << 0.5, -1.0, 2.0;
  return Dataset({"a", "b", "c"}, {2, 2, 3}, {0, 1, 2}, z);
}

TEST(Dataset, InfersHorizonAndEventTypes) {
  const Dataset data = toy();
  EXPECT_EQ(data.n(), 3);
  EXPECT_EQ(data.p(), 1);
  EXPECT_EQ(data.d(), 3);
  EXPECT_EQ(data.m(), 2);
  EXPECT_EQ(data.covariate_names(), std::vector<std::string>{"z1"});
  EXPECT_TRUE(validate(data).ok());
}

TEST(Dataset, ExpansionMatchesPersonPeriodLayout) {
  const auto records = expand(toy());
  ASSERT_EQ(records.size(), 7u);
  // Subject b fails from cause 1 on its second row only.
  EXPECT_EQ(records[2].subject, 1);
  EXPECT_EQ(records[2].t, 1);
  EXPECT_FALSE(records[2].delta(1));
  EXPECT_TRUE(records[3].delta(1));
  EXPECT_TRUE(records[6].delta(2));
  EXPECT_FALSE(records[1].delta(1));
}

TEST(Dataset, CollapseInvertsExpand) {
  const Dataset data = toy();
  const auto back = collapse(expand(data));
  ASSERT_EQ(back.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].time, data.time(i));
    EXPECT_EQ(back[i].event, data.event(i));
  }
}

TEST(Dataset, RiskSetsOfToyExample) {
  const auto risk = risk_sets(toy());
  EXPECT_EQ(risk.y(1), 3);
  EXPECT_EQ(risk.y(2), 3);
  EXPECT_EQ(risk.y(3), 1);
  EXPECT_EQ(risk.nj(1, 2), 1);
  EXPECT_EQ(risk.nj(2, 3), 1);
  EXPECT_EQ(risk.nj(1, 1), 0);
  EXPECT_EQ(risk.censored[1], 1);
}

TEST(Dataset, ExpandedDataGroupsByPeriod) {
  const ExpandedData expanded(toy());
  EXPECT_EQ(expanded.record_count(), 7);
  EXPECT_EQ(expanded.stratum(1).size(), 3u);
  EXPECT_EQ(expanded.stratum(3).size(), 1u);
  ASSERT_EQ(expanded.cases(1, 2).size(), 1u);
  EXPECT_EQ(expanded.cases(1, 2)[0], 1);
  EXPECT_TRUE(expanded.cases(2, 2).empty());
}

TEST(Dataset, HorizonOverrideCensorsLaterObservations) {
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 1);
  const Dataset data({}, {1, 5, 3}, {1, 2, 1}, z, DatasetOptions{3, 0});
  EXPECT_EQ(data.d(), 3);
  EXPECT_EQ(data.time(1), 3);
  EXPECT_EQ(data.event(1), 0);
  EXPECT_EQ(data.clamped(), 1);
  EXPECT_TRUE(validate(data).ok());
}

TEST(Dataset, ValidationFlagsBadLabelsAndCovariates) {
  Eigen::MatrixXd z(2, 1);
  z << 1.0, std::nan("");
  const Dataset data({}, {1, 2}, {9, 0}, z, DatasetOptions{0, 3});
  const auto report = validate(data);
  EXPECT_FALSE(report.ok());
  EXPECT_NE(report.failures().find("event label"), std::string::npos);
  EXPECT_NE(report.failures().find("non-finite"), std::string::npos);
  EXPECT_THROW(require_valid(data), InputError);
}

TEST(Dataset, SubsetAndColumnSelectionKeepDimensions) {
  const Dataset data = toy();
  const Dataset sub = data.subset({2, 0});
  EXPECT_EQ(sub.n(), 2);
  EXPECT_EQ(sub.d(), 3);
  EXPECT_EQ(sub.m(), 2);
  EXPECT_EQ(sub.id(0), "c");
  const Dataset none = data.select_columns({});
  EXPECT_EQ(none.p(), 0);
}

TEST(DatasetCsv, RoundTripsExactly) {
  Eigen::MatrixXd z(2, 2);
  z << 0.1, 1.0 / 3.0, -2.5e-7, 12345.678;
  const Dataset data({"x", "y"}, {1, 2}, {1, 0}, z, {}, {"age", "dose"});
  std::stringstream buffer;
  write_dataset_csv(buffer, data);
  const Dataset back = parse_dataset_csv(buffer);
  EXPECT_EQ(back.covariate_names(), data.covariate_names());
  EXPECT_EQ(back.ids(), data.ids());
  EXPECT_EQ(back.times(), data.times());
  EXPECT_EQ(back.events(), data.events());
  EXPECT_EQ(back.covariates(), data.covariates());
}

TEST(DatasetCsv, RejectsMalformedInput) {
  std::stringstream bad_header("idx,time,event\n1,1,0\n");
  EXPECT_THROW(parse_dataset_csv(bad_header), InputError);
  std::stringstream bad_number("id,time,event,z1\n1,1,0,abc\n");
  EXPECT_THROW(parse_dataset_csv(bad_number), InputError);
}

TEST(DatasetCsv, MissingCovariateLoadsAsNaNAndFailsValidation) {
  std::stringstream in("id,time,event,z1\n1,1,0,\n2,2,1,0.5\n");
  const Dataset data = parse_dataset_csv(in);
  EXPECT_TRUE(std::isnan(data.covariates()(0, 0)));
  EXPECT_FALSE(validate(data).ok());
}

TEST(DatasetCsv, RaggedRowsAreReported) {
  std::stringstream in("id,time,event,z1,z2\n1,1,0,1\n2,2,1,0.5,3\n");
  const Dataset data = parse_dataset_csv(in);
  EXPECT_EQ(data.ragged_rows(), 1);
  EXPECT_FALSE(validate(data).ok());
}

TEST(DatasetCsv, ExpandedExportHasOneIndicatorPerCause) {
  std::stringstream out;
  write_expanded_csv(out, toy());
  std::string header;
  std::getline(out, header);
  EXPECT_EQ(header, "id,t,j1,j2,z1");
  int rows = 0;
  for (std::string line; std::getline(out, line);) ++rows;
  EXPECT_EQ(rows, 7);
}

TEST(Format, SixSignificantDigitsAndSentinels) {
  EXPECT_EQ(format_number(0.123456789), "0.123457");
  EXPECT_EQ(format_number(std::nan("")), "NA");
  EXPECT_EQ(format_number(INFINITY), "inf");
  EXPECT_EQ(format_number(-INFINITY), "-inf");
  EXPECT_EQ(std::stod(format_exact(0.1)), 0.1);
}

TEST(Format, SplitCsvLineHandlesQuotes) {
  const auto fields = split_csv_line("a,\"b,c\",d");
  ASSERT_EQ(fields.size(), 3u);
  EXPECT_EQ(fields[1], "b,c");
}

TEST(Io, AtomicWriteReplacesContent) {
  const auto path = std::filesystem::temp_directory_path() / "dtscr_atomic_test.txt";
  write_file_atomic(path, "one");
  write_file_atomic(path, "two");
  std::ifstream in(path);
  std::string text;
  in >> text;
  EXPECT_EQ(text, "two");
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace dtscr
