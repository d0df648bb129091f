#include <gtest/gtest.h>

#include "nodulelink/study_matcher.hpp"

using namespace nodulelink;

namespace {

Study study(std::string id, StudyKind kind, Date d) { return {std::move(id), kind, d, "Site1", {}}; }

}  // namespace

TEST(MatchStudy, PicksClosest) {
    const std::vector<Study> s{study("a", StudyKind::fna, Date(2020, 5, 30)), study("b", StudyKind::fna, Date(2020, 1, 2))};
    auto m = match_study(Date(2020, 6, 1), s, StudyKind::fna);
    ASSERT_TRUE(m);
    EXPECT_EQ(m->study_id, "a");
}

TEST(MatchStudy, OutsideWindowIsAbsent) {
    const std::vector<Study> s{study("a", StudyKind::fna, Date(2019, 11, 1))};
    EXPECT_FALSE(match_study(Date(2020, 6, 1), s, StudyKind::fna));
}

TEST(MatchStudy, EqualGapPrefersEarlierStudy) {
    const std::vector<Study> s{study("late", StudyKind::fna, Date(2020, 6, 8)), study("early", StudyKind::fna, Date(2020, 5, 25))};
    auto m = match_study(Date(2020, 6, 1), s, StudyKind::fna);
    ASSERT_TRUE(m);
    EXPECT_EQ(m->date, Date(2020, 5, 25));
}

TEST(MatchStudy, WindowEdgeIsInclusive) {
    const Date path(2020, 6, 1);
    const std::vector<Study> s{study("edge", StudyKind::diagnostic, path.plus_days(-183))};
    EXPECT_TRUE(match_study(path, s, StudyKind::diagnostic));
    const std::vector<Study> out{study("past", StudyKind::diagnostic, path.plus_days(-184))};
    EXPECT_FALSE(match_study(path, out, StudyKind::diagnostic));
}

TEST(MatchStudy, IgnoresOtherKind) {
    const std::vector<Study> s{study("d", StudyKind::diagnostic, Date(2020, 6, 1))};
    EXPECT_FALSE(match_study(Date(2020, 6, 1), s, StudyKind::fna));
}

TEST(MatchStudy, SameDateTieResolvedById) {
    const std::vector<Study> s{study("z", StudyKind::fna, Date(2020, 6, 1)), study("m", StudyKind::fna, Date(2020, 6, 1))};
    EXPECT_EQ(match_study(Date(2020, 6, 1), s, StudyKind::fna)->study_id, "m");
}

TEST(MatchStudy, RejectsBadWindow) {
    EXPECT_THROW(match_study(Date(2020, 6, 1), {}, StudyKind::fna, MatchWindow{0}), ValidationError);
}
