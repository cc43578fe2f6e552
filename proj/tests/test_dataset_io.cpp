#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "grasp_sentinel/dataset_io.hpp"
#include "support.hpp"

using namespace gsentinel;

namespace {

std::string serialise(const Dataset& ds) {
    std::ostringstream os;
    write_dataset(ds, os);
    return os.str();
}

Dataset parse(const std::string& text) {
    std::istringstream is(text);
    return read_dataset(is, "mem");
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const DataError& e) {
        return e.what();
    }
    return {};
}

const std::string kHeader = "#grasp-sentinel v1 k=2 units=m,deg,ms\n";
const std::string kRow = "a,training,power,0,0.1,0.2,0.3,1,0,0,0,0.5,0.25\n";

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("gs_io_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(DatasetIo, WellFormedFile) {
    const auto ds = parse(kHeader + kRow + "a,training,power,12,0.1,0.2,0.3,1,0,0,0,0.5,0.25\n" +
                          "b,success,tridigital,0,0,0,0,0,1,0,0,1,0\n");
    EXPECT_EQ(ds.k, 2u);
    ASSERT_EQ(ds.trials.size(), 2u);
    EXPECT_EQ(ds.state_count(), 3u);
    EXPECT_EQ(ds.trials[1].grasp, GraspLabel::tridigital);
    EXPECT_EQ(ds.trials[1].condition, Condition::success);
    EXPECT_EQ(ds.trials[0].states[1].t_ms, 12.0);
}

TEST(DatasetIo, EmptyTrialListWritesHeaderOnly) {
    Dataset ds;
    ds.k = 3;
    const auto text = serialise(ds);
    EXPECT_EQ(text, "#grasp-sentinel v1 k=3 units=m,deg,ms\n");
    EXPECT_EQ(parse(text), ds);
}

TEST(DatasetIo, RejectsWrongFieldCountWithLineNumber) {
    const auto msg = error_of(kHeader + kRow + "a,training,power,12,0.1,0.2,0.3,1,0,0,0,0.5,0.25,0.1\n");
    EXPECT_NE(msg.find("mem:3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("expected 13 fields"), std::string::npos) << msg;
}

TEST(DatasetIo, RejectsMalformedInput) {
    EXPECT_FALSE(error_of("").empty());
    EXPECT_FALSE(error_of("trial,condition\n").empty());
    EXPECT_FALSE(error_of("#grasp-sentinel v2 k=2 units=m,deg,ms\n").empty());
    EXPECT_FALSE(error_of("#grasp-sentinel v1 units=m,deg,ms\n").empty());
    EXPECT_FALSE(error_of("#grasp-sentinel v1 k=2\n").empty());
    EXPECT_FALSE(error_of("#grasp-sentinel v1 k=2 units=mm,rad,s\n").empty());
    EXPECT_FALSE(error_of("#grasp-sentinel v1 k=0 units=m,deg,ms\n").empty());
    EXPECT_FALSE(error_of("#grasp-sentinel v1 k=2 units=m,deg,ms extra=1\n").empty());
    EXPECT_FALSE(error_of(kHeader + "a,training,power,0,x,0.2,0.3,1,0,0,0,0.5,0.25\n").empty());
    EXPECT_FALSE(error_of(kHeader + "a,testing,power,0,0,0.2,0.3,1,0,0,0,0.5,0.25\n").empty());
    EXPECT_FALSE(error_of(kHeader + "a,training,pinch,0,0,0.2,0.3,1,0,0,0,0.5,0.25\n").empty());
    EXPECT_FALSE(error_of(kHeader + ",training,power,0,0,0.2,0.3,1,0,0,0,0.5,0.25\n").empty());
}

TEST(DatasetIo, RejectsInvariantViolations) {
    EXPECT_NE(error_of(kHeader + "a,training,power,0,0,0,0,1,0,0,0,1.3,0\n").find("activation out of [0,1]"),
              std::string::npos);
    EXPECT_NE(error_of(kHeader + "a,training,power,0,0,0,0,0.9,0,0,0,1,0\n").find("non-unit quaternion"),
              std::string::npos);
    EXPECT_NE(error_of(kHeader + kRow + kRow).find("timestamps"), std::string::npos);
}

TEST(DatasetIo, RejectsNonContiguousAndInconsistentTrials) {
    const std::string b = "b,training,power,0,0,0,0,1,0,0,0,1,0\n";
    EXPECT_NE(error_of(kHeader + kRow + b + "a,training,power,12,0,0,0,1,0,0,0,1,0\n").find("contiguous"),
              std::string::npos);
    EXPECT_NE(error_of(kHeader + kRow + "a,training,rest,12,0,0,0,1,0,0,0,1,0\n").find("mid-trial"),
              std::string::npos);
}

TEST(DatasetIo, NearUnitQuaternionIsNormalisedOnLoad) {
    const auto ds = parse(kHeader + "a,training,power,0,0,0,0,1.0000005,0,0,0,1,0\n");
    EXPECT_DOUBLE_EQ(ds.trials[0].states[0].orientation.w, 1.0);
}

TEST(DatasetIo, ToleratesBlankLinesAndCrlf) {
    const auto ds = parse("#grasp-sentinel v1 k=2 units=m,deg,ms\r\n\r\na,training,power,0,0,0,0,1,0,0,0,1,0\r\n");
    EXPECT_EQ(ds.state_count(), 1u);
}

TEST(DatasetIo, RoundTripIsLossless) {
    Rng rng(41);
    for (int i = 0; i < 100; ++i) {
        const auto ds = gstest::random_dataset(rng, 1 + rng.below(5), 1 + rng.below(6), 30);
        const auto text = serialise(ds);
        const auto back = parse(text);
        EXPECT_EQ(back, ds);
        EXPECT_EQ(serialise(back), text);
    }
}

TEST(DatasetIo, SaveLoadThroughFilesIsByteIdentical) {
    Rng rng(42);
    const auto ds = gstest::random_dataset(rng, 2, 5, 40);
    const auto p1 = temp_path("a.csv"), p2 = temp_path("b.csv");
    save_dataset(ds, p1);
    save_dataset(load_dataset(p1), p2);
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    EXPECT_EQ(slurp(p1), slurp(p2));
    EXPECT_EQ(load_dataset(p2), ds);
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
    EXPECT_THROW(load_dataset(p1), DataError);
}
