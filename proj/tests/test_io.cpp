#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "snapweight/errors.hpp"
#include "snapweight/io.hpp"
#include "snapweight/rng.hpp"
#include "snapweight/sim.hpp"

using namespace snapweight;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() : path_(fs::temp_directory_path() / ("snapweight_io_" + std::to_string(::getpid()) + "_" +
                                                   std::to_string(counter_++))) {
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    static inline int counter_ = 0;
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

Dataset small_dataset(std::uint64_t seed = 111) {
    CampaignConfig cc;
    cc.seed = seed;
    cc.profiles[0].sessions = 3;
    cc.profiles[0].scenario.duration = 2.0;
    return generate_campaign(cc).dataset;
}

void expect_equal(const Dataset& a, const Dataset& b) {
    EXPECT_EQ(a.seed, b.seed);
    ASSERT_EQ(a.sessions.size(), b.sessions.size());
    for (std::size_t i = 0; i < a.sessions.size(); ++i) {
        EXPECT_EQ(a.sessions[i].id, b.sessions[i].id);
        EXPECT_EQ(a.sessions[i].split, b.sessions[i].split);
        EXPECT_EQ(a.sessions[i].seed, b.sessions[i].seed);
        EXPECT_EQ(a.sessions[i].profile, b.sessions[i].profile);
    }
    ASSERT_EQ(a.epochs.size(), b.epochs.size());
    for (std::size_t i = 0; i < a.epochs.size(); ++i) {
        EXPECT_EQ(a.epochs[i].session_id, b.epochs[i].session_id);
        EXPECT_EQ(a.epochs[i].epoch, b.epochs[i].epoch);
    }
}

// Header plus the given epoch lines.
std::string with_header(const Dataset& d, const std::vector<std::string>& lines) {
    std::string s = serialize_header({d.seed, d.sessions}) + "\n";
    for (const auto& l : lines) s += l + "\n";
    return s;
}

}  // namespace

TEST(Io, RoundTrip) {
    TempDir dir;
    const Dataset d = small_dataset();
    write_dataset(d, dir / "d.jsonl");
    expect_equal(d, read_dataset(dir / "d.jsonl"));
}

TEST(Io, ByteIdenticalWrites) {
    TempDir dir;
    const Dataset d = small_dataset();
    write_dataset(d, dir / "a.jsonl");
    write_dataset(read_dataset(dir / "a.jsonl"), dir / "b.jsonl");
    EXPECT_EQ(slurp(dir / "a.jsonl"), slurp(dir / "b.jsonl"));
}

TEST(Io, EmptyDatasetIsHeaderOnly) {
    TempDir dir;
    Dataset d;
    d.seed = 9;
    write_dataset(d, dir / "e.jsonl");
    const std::string text = slurp(dir / "e.jsonl");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
    expect_equal(d, read_dataset(dir / "e.jsonl"));
}

TEST(Io, TruncatedLineNamesLine) {
    TempDir dir;
    const Dataset d = small_dataset();
    const std::string second = serialize_epoch(d.epochs[1]);
    spit(dir / "t.jsonl", with_header(d, {serialize_epoch(d.epochs[0]), second.substr(0, second.size() / 2)}));
    try {
        read_dataset(dir / "t.jsonl");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(Io, DuplicateMeasurementRejected) {
    TempDir dir;
    const Dataset d = small_dataset();
    EpochRecord rec = d.epochs[0];
    rec.epoch.measurements.insert(rec.epoch.measurements.begin() + 1, rec.epoch.measurements[0]);
    spit(dir / "dup.jsonl", with_header(d, {serialize_epoch(rec)}));
    try {
        read_dataset(dir / "dup.jsonl");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos) << e.what();
    }
}

TEST(Io, UnknownFieldReportsColumn) {
    TempDir dir;
    const Dataset d = small_dataset();
    std::string line = serialize_epoch(d.epochs[0]);
    const auto pos = line.find("\"measurements\"");
    line.insert(pos, "\"extra\":1,");
    spit(dir / "u.jsonl", with_header(d, {line}));
    try {
        read_dataset(dir / "u.jsonl");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.column(), pos + 1);
    }
}

TEST(Io, StructuralErrors) {
    TempDir dir;
    const Dataset d = small_dataset();
    EpochRecord stranger = d.epochs[0];
    stranger.session_id = "nobody";
    spit(dir / "s.jsonl", with_header(d, {serialize_epoch(stranger)}));
    EXPECT_THROW(read_dataset(dir / "s.jsonl"), ParseError);

    spit(dir / "o.jsonl", with_header(d, {serialize_epoch(d.epochs[1]), serialize_epoch(d.epochs[0])}));
    EXPECT_THROW(read_dataset(dir / "o.jsonl"), ParseError);

    std::string header = serialize_header({d.seed, d.sessions});
    header.replace(header.find("\"version\":1"), 11, "\"version\":7");
    spit(dir / "v.jsonl", header + "\n");
    EXPECT_THROW(read_dataset(dir / "v.jsonl"), VersionMismatch);

    EXPECT_THROW(read_dataset(dir / "missing.jsonl"), IoError);
}

TEST(Io, StreamingReader) {
    TempDir dir;
    const Dataset d = small_dataset();
    write_dataset(d, dir / "d.jsonl");
    DatasetReader reader(dir / "d.jsonl");
    EXPECT_EQ(reader.header().sessions.size(), 3u);
    EpochRecord rec;
    std::size_t n = 0;
    while (reader.next(rec)) {
        EXPECT_EQ(rec.epoch, d.epochs[n].epoch);
        ++n;
    }
    EXPECT_EQ(n, d.epochs.size());
}

TEST(Io, FullCampaignWithinBudget) {
    TempDir dir;
    CampaignConfig cc;
    const Dataset d = generate_campaign(cc).dataset;
    ASSERT_EQ(d.epochs.size(), 30000u);
    const auto start = std::chrono::steady_clock::now();
    write_dataset(d, dir / "big.jsonl");
    const Dataset back = read_dataset(dir / "big.jsonl");
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_EQ(back.epochs.size(), d.epochs.size());
    EXPECT_LT(seconds, 10.0);
}

TEST(Io, RunConfigRoundTrip) {
    RunConfig c;
    c.seed = 42;
    c.simulation.profiles[0].sessions = 12;
    c.simulation.profiles[0].scenario.nlos_bias_mean = 25.0;
    c.finalize();
    const std::string text = dump_run_config(c);
    const RunConfig back = parse_run_config(text);
    EXPECT_EQ(dump_run_config(back), text);
    EXPECT_EQ(back.seed, 42u);
    EXPECT_EQ(back.simulation.profiles[0].sessions, 12u);
    EXPECT_EQ(back.train.seed, 42u);
}

TEST(Io, RunConfigErrorsNameFields) {
    try {
        parse_run_config(R"({"simulation":{"profiles":[{"profile":"urban_canyon","nlos_curve":[
            {"elevation":5,"probability":0.5},{"elevation":30,"probability":1.5}]}]}})");
        FAIL();
    } catch (const ConfigInvalid& e) {
        EXPECT_EQ(e.field(), "simulation.profiles[0].nlos_curve[1].probability");
    }
    try {
        parse_run_config(R"({"train":{"learning_rat":0.1}})");
        FAIL();
    } catch (const ConfigInvalid& e) {
        EXPECT_EQ(e.field(), "train.learning_rat");
    }
    EXPECT_THROW(parse_run_config(R"({"version":2})"), VersionMismatch);
    EXPECT_THROW(parse_run_config(R"({"seed":"x"})"), ConfigInvalid);
}

TEST(Io, CheckpointReproducesForwardBitExactly) {
    TempDir dir;
    Checkpoint c;
    c.result.best.feature_set = FeatureSet::Full;
    c.result.best.model = LstmModel::initialized(14, 5, 2, 77);
    c.result.best.normalizer.mean = Eigen::VectorXd::LinSpaced(14, -1.0, 1.0 / 3.0);
    c.result.best.normalizer.scale = Eigen::VectorXd::Constant(14, 0.1);
    c.result.state.current = c.result.best.model;
    c.result.state.adam.m.assign(c.result.best.model.parameter_count(), 1.0 / 7.0);
    c.result.state.adam.v.assign(c.result.best.model.parameter_count(), 1e-300);
    c.result.state.history.push_back({1, 0.5, 0.25});
    save_checkpoint(c, dir / "m.json");
    const Checkpoint back = load_checkpoint(dir / "m.json");
    Rng rng(3);
    Eigen::MatrixXd raw(9, 14);
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw.data()[i] = rng.normal(0.0, 5.0);
    EXPECT_EQ(back.result.best.quality(raw), c.result.best.quality(raw));
    EXPECT_EQ(back.result.state.adam.m, c.result.state.adam.m);
    EXPECT_EQ(back.result.state.adam.v, c.result.state.adam.v);
    EXPECT_TRUE(std::isinf(back.result.state.best_val));
    save_checkpoint(back, dir / "m2.json");
    EXPECT_EQ(slurp(dir / "m.json"), slurp(dir / "m2.json"));
}
