#include <gtest/gtest.h>

#include "nodulelink/corpus.hpp"
#include "nodulelink/rad_parser.hpp"
#include "support.hpp"

using namespace nodulelink;
using nodulelink::testing::fixture;

TEST(RadParser, RightSideSkipsLobeMeasurement) {
    const auto n = extract_nodule_measurements(fixture("radiology_bilateral.txt"), Laterality::right);
    ASSERT_EQ(n.size(), 1u);
    EXPECT_EQ(n[0].ordinal, 1);
    EXPECT_EQ(n[0].dims_cm, (std::vector<double>{1.6, 0.7, 1.1}));
    EXPECT_EQ(n[0].source_line, 15);
}

TEST(RadParser, LeftSideMeasuresUpTo) {
    const auto n = extract_nodule_measurements(fixture("radiology_bilateral.txt"), Laterality::left);
    ASSERT_EQ(n.size(), 1u);
    EXPECT_EQ(n[0].dims_cm, (std::vector<double>{7.0, 4.1, 5.1}));
    EXPECT_EQ(n[0].source_line, 21);
}

TEST(RadParser, Counts) {
    const auto report = fixture("radiology_bilateral.txt");
    EXPECT_EQ(count_nodules_on_side(report, Laterality::right), 1);
    EXPECT_EQ(count_nodules_on_side(report, Laterality::isthmus), 0);
}

TEST(RadParser, EmptySide) {
    const std::string report =
        "Findings:\n\nRIGHT LOBE:\n\nThe right lobe measures 4.0 x 2.0 x 2.0 cm. No nodules are identified.\n\n"
        "LEFT LOBE:\n\n* Left nodule #1: The nodule measures 1.0 x 0.8 x 0.9 cm.\n\nImpression:\n\n1. Left nodule.\n";
    EXPECT_TRUE(extract_nodule_measurements(report, Laterality::right).empty());
    EXPECT_EQ(count_nodules_on_side(report, Laterality::left), 1);
}

TEST(RadParser, NoFindingsSection) {
    Diagnostics diag;
    EXPECT_TRUE(extract_nodule_measurements("Impression: nodule measures 1.0 cm.", Laterality::right, &diag).empty());
    EXPECT_FALSE(diag.notes.empty());
    EXPECT_FALSE(has_findings_section("Impression: none"));
}

TEST(RadParser, ImpressionIsOutsideFindings) {
    const std::string report =
        "Findings:\n\nRIGHT LOBE:\n\nNo nodules.\n\nImpression:\n\nThe right nodule measures 2.0 x 1.0 x 1.0 cm.\n";
    EXPECT_TRUE(extract_nodule_measurements(report, Laterality::right).empty());
}

TEST(RadParser, InlineSideWordsWithoutHeaders) {
    const std::string report =
        "Findings:\n\n* Right nodule #1: The nodule measures 1.2 x 0.9 x 1.0 cm.\n\n"
        "* Left nodule #2: The nodule measures 0.5 cm.\n\nImpression:\n";
    const auto r = extract_nodule_measurements(report, Laterality::right);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].dims_cm, (std::vector<double>{1.2, 0.9, 1.0}));
    const auto l = extract_nodule_measurements(report, Laterality::left);
    ASSERT_EQ(l.size(), 1u);
    EXPECT_EQ(l[0].dims_cm, (std::vector<double>{0.5}));
}

TEST(RadParser, GeneratedReportWithTwoRightNodules) {
    CaseSpec c;
    c.case_id = "case0001";
    c.site = "Site1";
    c.pathology_date = Date(2020, 6, 1);
    NoduleTruth n;
    n.laterality = Laterality::right;
    n.label = "#1";
    n.dims_cm = {1.6, 0.7, 1.1};
    c.nodules.push_back(n);
    c.incidental_nodules.push_back({Laterality::right, "#2", {0.9, 0.8, 0.7}});
    c.lobes.push_back({Laterality::right, {4.2, 2.1, 2.1}});
    c.lobes.push_back({Laterality::isthmus, {0.4}});
    c.studies.push_back({"diag1", StudyKind::diagnostic, Date(2020, 5, 20), {}});
    const auto report = write_radiology_report(c);
    EXPECT_NE(report.find("measures 1.6 x 0.7 x 1.1 cm"), std::string::npos);
    EXPECT_EQ(count_nodules_on_side(report, Laterality::right), 2);
    EXPECT_EQ(count_nodules_on_side(report, Laterality::isthmus), 0);
    for (const auto& r : extract_nodule_measurements(report, Laterality::right)) {
        EXPECT_NE(r.dims_cm, (std::vector<double>{4.2, 2.1, 2.1}));
    }
}

TEST(MatchMeasurements, WithinTolerance) {
    EXPECT_TRUE(match_measurements({1.63, 0.71}, {1.6, 0.7, 1.1}, 0.05));
    EXPECT_FALSE(match_measurements({1.63, 0.81}, {1.6, 0.7, 1.1}, 0.05));
    EXPECT_FALSE(match_measurements(std::vector<double>{}, {1.6, 0.7, 1.1}, 0.05));
    EXPECT_THROW(match_measurements({1.0}, {1.0}, -0.1), ValidationError);
}

TEST(MatchMeasurements, EachReportDimensionUsedOnce) {
    EXPECT_FALSE(match_measurements({1.6, 1.62}, {1.6, 0.7, 1.1}, 0.05));
    EXPECT_TRUE(match_measurements({1.6, 1.62}, {1.6, 1.6, 1.1}, 0.05));
}
