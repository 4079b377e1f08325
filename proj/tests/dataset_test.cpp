#include "support.hpp"

#include "vadsk/dataset.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace vadsk;
using vadsk::testing::TempDir;
using vadsk::testing::write_text;

namespace {

Dataset make_dataset(std::size_t n_normal, std::size_t n_anomalous) {
    Dataset ds;
    for (std::size_t i = 0; i < n_normal; ++i)
        ds.frames.push_back({"n" + std::to_string(i), "v0", "n.png", Label::Normal});
    for (std::size_t i = 0; i < n_anomalous; ++i)
        ds.frames.push_back({"a" + std::to_string(i), "v1", "a.png", Label::Anomalous});
    return ds;
}

std::set<std::string> ids_of(const std::vector<FrameRecord>& frames) {
    std::set<std::string> out;
    for (const auto& f : frames) out.insert(f.frame_id);
    return out;
}

} // namespace

TEST(Manifest, ThreeLinesReadBackInOrder) {
    TempDir dir;
    write_text(dir / "m.tsv", "# header\nf1\tv1\timg/1.png\t0\nf2\tv1\timg/2.png\t0\nf3\tv2\t/abs/3.png\t1\n");
    const auto ds = load_manifest(dir / "m.tsv");
    ASSERT_EQ(ds.frames.size(), 3u);
    EXPECT_EQ(ds.frames[0].frame_id, "f1");
    EXPECT_EQ(ds.frames[2].frame_id, "f3");
    EXPECT_EQ(ds.count(Label::Anomalous), 1u);
    EXPECT_EQ(ds.frames[0].path, dir.path() / "img/1.png");
    EXPECT_EQ(ds.frames[2].path, "/abs/3.png");
    EXPECT_EQ(ds.name, "m");
}

TEST(Manifest, EmptyFileGivesEmptyDataset) {
    TempDir dir;
    write_text(dir / "m.tsv", "");
    EXPECT_TRUE(load_manifest(dir / "m.tsv").frames.empty());
}

TEST(Manifest, DuplicateFrameIdRejected) {
    try {
        parse_manifest("f1\tv\tp\t0\nf1\tv\tq\t1\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DuplicateFrameId);
        EXPECT_EQ(e.detail(), "f1");
    }
}

TEST(Manifest, MalformedRecordsReportLineNumber) {
    for (const char* bad : {"f1\tv\tp\n", "f1\tv\tp\t2\n", "f1\tv\tp\t0\textra\n", "\tv\tp\t0\n"}) {
        try {
            parse_manifest(std::string("# ok\n") + bad);
            FAIL() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::MalformedRecord);
            EXPECT_EQ(e.detail(), "line 2");
        }
    }
}

TEST(Manifest, MissingFile) {
    try {
        load_manifest("/nonexistent/manifest.tsv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingFile);
    }
}

TEST(Manifest, CrlfLineEndings) {
    const auto ds = parse_manifest("f1\tv\tp\t1\r\nf2\tv\tp\t0\r\n");
    ASSERT_EQ(ds.frames.size(), 2u);
    EXPECT_EQ(ds.frames[0].label, Label::Anomalous);
}

TEST(InductionSampling, TwentyOfEachDisjoint) {
    const auto ds = make_dataset(100, 50);
    const auto s = sample_induction_frames(ds, 20, 42);
    ASSERT_EQ(s.normal.size(), 20u);
    ASSERT_EQ(s.anomalous.size(), 20u);
    EXPECT_EQ(ids_of(s.normal).size(), 20u);
    EXPECT_EQ(ids_of(s.anomalous).size(), 20u);
    for (const auto& f : s.normal) EXPECT_EQ(f.label, Label::Normal);
    for (const auto& f : s.anomalous) EXPECT_EQ(f.label, Label::Anomalous);
}

TEST(InductionSampling, ExactlyOneOfEachIsForced) {
    const auto ds = make_dataset(1, 1);
    const auto s = sample_induction_frames(ds, 1, 9);
    EXPECT_EQ(s.normal.front().frame_id, "n0");
    EXPECT_EQ(s.anomalous.front().frame_id, "a0");
}

TEST(InductionSampling, InsufficientAnomalous) {
    try {
        sample_induction_frames(make_dataset(10, 3), 5, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientFrames);
        EXPECT_EQ(e.detail(), "anomalous have 3 need 5");
    }
}

TEST(InductionSampling, DeterministicPerSeed) {
    const auto ds = make_dataset(100, 50);
    const auto a = sample_induction_frames(ds, 20, 5);
    const auto b = sample_induction_frames(ds, 20, 5);
    const auto c = sample_induction_frames(ds, 20, 6);
    EXPECT_EQ(a.normal, b.normal);
    EXPECT_EQ(a.anomalous, b.anomalous);
    EXPECT_NE(a.normal, c.normal);
}

TEST(Splits, SixtyRemainingGivesFortyEightTwelve) {
    const auto ds = make_dataset(100, 0);
    std::set<std::string> excluded;
    for (int i = 0; i < 40; ++i) excluded.insert("n" + std::to_string(i));
    const auto s = make_splits(ds, excluded, 0.8, 3);
    EXPECT_EQ(s.train.size(), 48u);
    EXPECT_EQ(s.test.size(), 12u);
}

TEST(Splits, TenFramesExactDivision) {
    const auto s = make_splits(make_dataset(10, 0), {}, 0.8, 3);
    EXPECT_EQ(s.train.size(), 8u);
    EXPECT_EQ(s.test.size(), 2u);
}

TEST(Splits, UnknownExcludedId) {
    try {
        make_splits(make_dataset(10, 0), {"ghost"}, 0.8, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownExcludedId);
        EXPECT_EQ(e.detail(), "ghost");
    }
}

TEST(Splits, RatioOutsideOpenIntervalRejected) {
    EXPECT_THROW(make_splits(make_dataset(10, 0), {}, 1.0, 3), Error);
    EXPECT_THROW(make_splits(make_dataset(10, 0), {}, 0.0, 3), Error);
}

TEST(Splits, FloorAbsorbsRepresentationError) {
    EXPECT_EQ(train_count(100, 0.29), 29u);
    EXPECT_EQ(train_count(60, 0.8), 48u);
    EXPECT_EQ(train_count(7, 0.8), 5u);
}

// Property: for random manifests and seeds the four sets are disjoint, cover
// every frame, honor the sample size and the floor split rule, and the
// serialization is reproducible.
TEST(Splits, PropertyDisjointSizedDeterministic) {
    Rng gen(2024, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n_norm = 5 + gen.below(80);
        const auto n_anom = 5 + gen.below(40);
        const auto n = 1 + gen.below(std::min(n_norm, n_anom));
        const auto seed = gen.next();
        const auto ds = make_dataset(n_norm, n_anom);
        const auto s = plan_splits(ds, n, 0.8, seed);

        std::set<std::string> all;
        std::size_t total = 0;
        for (const auto* part : {&s.induction_normal, &s.induction_anomalous, &s.train, &s.test}) {
            all.insert(part->begin(), part->end());
            total += part->size();
        }
        ASSERT_EQ(all.size(), total) << "sets overlap";
        ASSERT_EQ(total, ds.frames.size());
        ASSERT_EQ(s.induction_normal.size(), n);
        ASSERT_EQ(s.induction_anomalous.size(), n);
        const auto remaining = ds.frames.size() - 2 * n;
        ASSERT_EQ(s.train.size(), train_count(remaining, 0.8));
        ASSERT_EQ(serialize(s), serialize(plan_splits(ds, n, 0.8, seed)));
    }
}

TEST(Splits, SerializationRoundTrips) {
    const auto s = plan_splits(make_dataset(30, 10), 4, 0.8, 11);
    const auto text = serialize(s);
    EXPECT_EQ(parse_split_assignment(text), s);
    EXPECT_NE(text.find(kPrngId), std::string::npos);
}
