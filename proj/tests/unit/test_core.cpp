#include <gtest/gtest.h>

#include "nodulelink/font.hpp"
#include "nodulelink/json_io.hpp"
#include "nodulelink/raster.hpp"
#include "nodulelink/rng.hpp"
#include "support.hpp"

using namespace nodulelink;

TEST(Date, ParsesAndPrintsIso) {
    auto d = Date::parse("2020-06-01");
    ASSERT_TRUE(d);
    EXPECT_EQ(d->iso(), "2020-06-01");
    EXPECT_EQ(Date(2020, 6, 1).plus_days(-7).iso(), "2020-05-25");
    EXPECT_EQ(Date(2020, 6, 1).days_since(Date(2019, 11, 1)), 213);
}

TEST(Date, RejectsMalformed) {
    EXPECT_FALSE(Date::parse("2020-6-01"));
    EXPECT_FALSE(Date::parse("2020-02-30"));
    EXPECT_FALSE(Date::parse("20a0-01-01"));
    EXPECT_THROW(Date::parse_or_throw("yesterday"), ValidationError);
}

TEST(Enums, NamesRoundTrip) {
    for (auto l : {Laterality::left, Laterality::right, Laterality::isthmus}) {
        EXPECT_EQ(parse_laterality(to_string(l)), l);
    }
    for (auto d : {Diagnosis::benign, Diagnosis::suspicious, Diagnosis::malignant}) {
        EXPECT_EQ(parse_diagnosis(to_string(d)), d);
    }
    EXPECT_EQ(parse_study_kind("FNA"), StudyKind::fna);
    EXPECT_THROW(parse_view("oblique"), ValidationError);
}

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42), c(43);
    std::vector<std::uint64_t> va, vb, vc;
    for (int i = 0; i < 8; ++i) {
        va.push_back(a.next());
        vb.push_back(b.next());
        vc.push_back(c.next());
    }
    EXPECT_EQ(va, vb);
    EXPECT_NE(va, vc);
}

TEST(Rng, DerivedStreamsDifferByLabel) {
    auto a = Rng::derive(7, "case0001");
    auto b = Rng::derive(7, "case0002");
    EXPECT_NE(a.next(), b.next());
}

TEST(Rng, RangeStaysInBounds) {
    Rng r(1);
    for (int i = 0; i < 1000; ++i) {
        const auto v = r.range(-3, 5);
        EXPECT_GE(v, -3);
        EXPECT_LE(v, 5);
    }
}

TEST(Raster, PgmRoundTrip) {
    Raster img(5, 3, 7);
    img.at(4, 2) = 200;
    const auto back = decode_pgm(encode_pgm(img));
    EXPECT_EQ(back.width(), 5);
    EXPECT_EQ(back.height(), 3);
    EXPECT_EQ(back.at(4, 2), 200);
    EXPECT_EQ(back.at(0, 0), 7);
}

TEST(Raster, PgmRejectsBadInput) {
    EXPECT_THROW(decode_pgm("P2\n1 1\n255\n0"), ValidationError);
    EXPECT_THROW(decode_pgm("P5\n4 4\n255\nab"), ValidationError);
    EXPECT_THROW(decode_pgm("P5\n2 2\n65535\n"), ValidationError);
}

TEST(Raster, CropKeepsPixels) {
    Raster img(10, 10, 0);
    img.at(6, 8) = 99;
    const auto c = img.crop(5, 5, 5, 5);
    EXPECT_EQ(c.width(), 5);
    EXPECT_EQ(c.at(1, 3), 99);
}

TEST(FileIo, MissingFileIsIoError) {
    EXPECT_THROW(read_file("/nonexistent/dir/file.txt"), IoError);
}

TEST(FileIo, WriteCreatesParents) {
    nodulelink::testing::TempDir tmp("fileio");
    const auto p = tmp.path() / "a" / "b" / "c.txt";
    write_file(p, "hello");
    EXPECT_EQ(read_file(p), "hello");
}

TEST(Font, CheckedInAtlasMatchesEmbedded) {
    const auto from_file = GlyphFont::load(std::filesystem::path(NODULELINK_DATA_DIR) / "font8x16.glf");
    EXPECT_EQ(from_file.to_atlas(), default_font().to_atlas());
}

TEST(Font, CoversBannerAlphabet) {
    EXPECT_TRUE(default_font().supports("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789#.x:/ "));
}

TEST(Font, RejectsCorruptAtlas) {
    std::vector<std::uint8_t> bytes{'N', 'L', 'G', 'X', 1, 8, 16, 0};
    EXPECT_THROW(GlyphFont::from_atlas(bytes), ValidationError);
    bytes[3] = 'F';
    bytes[7] = 2;
    EXPECT_THROW(GlyphFont::from_atlas(bytes), ValidationError);
}

TEST(Json, StudyRoundTrip) {
    Study s{"fna1", StudyKind::fna, Date(2021, 3, 4), "Site1", {"fna1_01", "fna1_02"}};
    const auto back = json(s).get<Study>();
    EXPECT_EQ(back.study_id, "fna1");
    EXPECT_EQ(back.kind, StudyKind::fna);
    EXPECT_EQ(back.date, Date(2021, 3, 4));
    EXPECT_EQ(back.image_ids, s.image_ids);
}

TEST(Json, ParseErrorsAreValidationErrors) {
    EXPECT_THROW(parse_json("{oops", "test"), ValidationError);
}
