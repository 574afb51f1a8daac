// Copyright 2026 The rvqkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rvqkit/cli.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "rvqkit/audio.h"
#include "rvqkit/byte_io.h"
#include "rvqkit/codec.h"
#include "test_signals.h"

namespace rvqkit {
namespace {

namespace fs = std::filesystem;
using testing::Mix;
using testing::Noise;
using testing::Sawtooth;
using testing::TempDir;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result Cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json LastJson(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  return nlohmann::json::parse(last);
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Tone corpus plus a trained small model shared by the suite.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli");
    fs::create_directories(Path("corpus"));
    int k = 0;
    for (double f : {120.0, 160.0, 200.0, 240.0, 280.0}) {
      WriteWav(Sawtooth(f, 16000, 1.0, 0.4),
               Path("corpus") / ("tone" + std::to_string(k++) + ".wav"), WavEncoding::kFloat32);
    }
    const Result r = Cli(SmallTrain(Path("model.espk")));
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  static fs::path Path(const std::string& name) { return *dir_ / name; }
  static std::string P(const std::string& name) { return Path(name).string(); }

  static std::vector<std::string> SmallTrain(const fs::path& out) {
    return {"train",    "--corpus",        P("corpus"), "--out", out.string(),
            "--levels", "4",               "--codebook-size", "16",
            "--epochs", "3",               "--gl-iterations", "8",
            "--seed",   "11"};
  }

  static TempDir* dir_;
};

TempDir* CliTest::dir_ = nullptr;

TEST(CliBasicsTest, NoSubcommandIsUsageError) {
  EXPECT_EQ(Cli({}).code, kExitUsage);
  EXPECT_EQ(Cli({"frobnicate"}).code, kExitUsage);
}

TEST(CliBasicsTest, HelpSucceeds) {
  const Result r = Cli({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("train"), std::string::npos);
}

TEST_F(CliTest, TrainReportAndHeader) {
  const Result r = Cli(SmallTrain(Path("model2.espk")));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const nlohmann::json j = LastJson(r.out);
  EXPECT_EQ(j["levels"], 4);
  EXPECT_EQ(j["codebook_size"], 16);
  EXPECT_EQ(j["files"], 5);
  ASSERT_EQ(j["report"].size(), 2u);
  EXPECT_EQ(j["report"][0]["levels"], 1);
  EXPECT_EQ(j["report"][1]["levels"], 4);
  EXPECT_EQ(Slurp(Path("model.espk")), Slurp(Path("model2.espk")));
}

TEST_F(CliTest, TrainDefaultsRecordCeilingShape) {
  // Defaults need 1024 frames; a longer corpus keeps the run small.
  fs::create_directories(Path("long"));
  for (int k = 0; k < 3; ++k) {
    WriteWav(Mix(Sawtooth(130.0 + 40 * k, 16000, 8.0, 0.3),
                 Noise(128000, 16000, 50 + k, 0.02)),
             Path("long") / ("clip" + std::to_string(k) + ".wav"), WavEncoding::kFloat32);
  }
  const Result r = Cli({"train", "--corpus", P("long"), "--out", P("default.espk"),
                        "--epochs", "1", "--report-levels", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const nlohmann::json j = LastJson(r.out);
  EXPECT_EQ(j["levels"], 32);
  EXPECT_EQ(j["codebook_size"], 1024);
  const SpectralCodec codec = LoadModel(ReadFileBytes(Path("default.espk")));
  EXPECT_EQ(codec.config().num_levels, 32);
  EXPECT_EQ(codec.config().codebook_size, 1024);
}

TEST_F(CliTest, TrainValidatesBeforeReading) {
  const Result r = Cli({"train", "--corpus", P("missing_dir"), "--out",
                        P("never.espk"), "--levels", "0"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_FALSE(fs::exists(Path("never.espk")));
}

TEST_F(CliTest, TrainEmptyCorpusIsDataError) {
  fs::create_directories(Path("empty"));
  const Result r = Cli({"train", "--corpus", P("empty"), "--out", P("e.espk")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_FALSE(fs::exists(Path("e.espk")));
}

TEST_F(CliTest, EncodeReportsLevels) {
  const Result r = Cli({"encode", "--model", P("model.espk"), "--in",
                        P("corpus/tone0.wav"), "--out", P("tone0.espc"),
                        "--bitrate", "400"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const nlohmann::json j = LastJson(r.out);
  EXPECT_EQ(j["levels"], 2);  // 50 Hz * log2(16) = 200 bps per level
  EXPECT_EQ(j["frames"], 50);
  EXPECT_EQ(j["achieved_bitrate"], 400.0);
  EXPECT_EQ(j["bytes"], kStreamHeaderBytes + 50 * 2 * 2);
  EXPECT_EQ(fs::file_size(Path("tone0.espc")), j["bytes"].get<size_t>());
}

TEST_F(CliTest, EncodeFourKbpsOnDefaultShapeIsEightLevels) {
  CodecConfig config;  // 50 Hz frames, B = 1024, L = 32
  std::vector<RvqQuantizer> groups;
  std::vector<RvqLevel> levels;
  Rng rng(3);
  for (int l = 0; l < 32; ++l) {
    Matrix codes(1024, 80);
    for (double& v : codes.data()) v = static_cast<float>(rng.Uniform());
    levels.push_back({Codebook(std::move(codes)), std::nullopt});
  }
  groups.emplace_back(std::move(levels));
  AtomicWriteFile(Path("big.espk"),
                  SaveModel(SpectralCodec(config, GrvqQuantizer(std::move(groups)))));
  const Result r = Cli({"encode", "--model", P("big.espk"), "--in",
                        P("corpus/tone1.wav"), "--out", P("big.espc"),
                        "--bitrate", "4000"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(LastJson(r.out)["levels"], 8);
}

TEST_F(CliTest, RandomBitrateDrawsFromSet) {
  std::set<int> seen;
  for (int seed = 0; seed < 40; ++seed) {
    const Result r = Cli({"encode", "--model", P("model.espk"), "--in",
                          P("corpus/tone2.wav"), "--out", P("rand.espc"),
                          "--random-bitrate", "200,400,600,800", "--seed",
                          std::to_string(seed)});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const int requested = LastJson(r.out)["requested_bitrate"].get<int>();
    EXPECT_TRUE(requested == 200 || requested == 400 || requested == 600 ||
                requested == 800);
    seen.insert(requested);
  }
  EXPECT_EQ(seen.size(), 4u);
}

TEST_F(CliTest, BitrateFlagsAreExclusive) {
  const Result both = Cli({"encode", "--model", P("model.espk"), "--in",
                           P("corpus/tone0.wav"), "--out", P("x.espc"),
                           "--bitrate", "400", "--random-bitrate", "200,400"});
  EXPECT_EQ(both.code, kExitUsage);
  const Result neither = Cli({"encode", "--model", P("model.espk"), "--in",
                              P("corpus/tone0.wav"), "--out", P("x.espc")});
  EXPECT_EQ(neither.code, kExitUsage);
  EXPECT_FALSE(fs::exists(Path("x.espc")));
}

TEST_F(CliTest, DecodeDurationAndDeterminism) {
  ASSERT_EQ(Cli({"encode", "--model", P("model.espk"), "--in", P("corpus/tone3.wav"),
                 "--out", P("tone3.espc"), "--bitrate", "800"})
                .code,
            kExitOk);
  const Result a = Cli({"decode", "--model", P("model.espk"), "--in",
                        P("tone3.espc"), "--out", P("a.wav")});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  const Result b = Cli({"decode", "--model", P("model.espk"), "--in",
                        P("tone3.espc"), "--out", P("b.wav")});
  ASSERT_EQ(b.code, kExitOk) << b.err;
  EXPECT_EQ(Slurp(Path("a.wav")), Slurp(Path("b.wav")));
  const AudioBuffer y = ReadWav(Path("a.wav"));
  EXPECT_EQ(y.size(), 50u * 320u);
  EXPECT_DOUBLE_EQ(y.duration_seconds(), 1.0);
}

TEST_F(CliTest, DecodeTamperedMagicIsDataError) {
  ASSERT_EQ(Cli({"encode", "--model", P("model.espk"), "--in", P("corpus/tone4.wav"),
                 "--out", P("tamper.espc"), "--bitrate", "400"})
                .code,
            kExitOk);
  std::string bytes = Slurp(Path("tamper.espc"));
  bytes[0] = 'Z';
  std::ofstream(Path("tamper.espc"), std::ios::binary) << bytes;
  const Result r = Cli({"decode", "--model", P("model.espk"), "--in",
                        P("tamper.espc"), "--out", P("tamper.wav")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("bad_magic"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(Path("tamper.wav")));
}

TEST_F(CliTest, EvalIdentityLine) {
  const Result r = Cli({"eval", "--ref", P("corpus/tone1.wav"), "--deg",
                        P("corpus/tone1.wav")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const nlohmann::json j = LastJson(r.out);
  EXPECT_NEAR(j["metrics"]["mcd"].get<double>(), 0.0, 1e-12);
  EXPECT_NEAR(j["metrics"]["stoi"].get<double>(), 1.0, 1e-6);
  EXPECT_EQ(j["metrics"]["si_snr"], 60.0);
}

TEST_F(CliTest, EvalMetricSelection) {
  const Result r = Cli({"eval", "--ref", P("corpus"), "--deg", P("corpus"),
                        "--metrics", "si_snr"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto lines = Lines(r.out);
  ASSERT_EQ(lines.size(), 5u);
  for (const std::string& line : lines) {
    const nlohmann::json j = nlohmann::json::parse(line);
    ASSERT_EQ(j["metrics"].size(), 1u);
    EXPECT_TRUE(j["metrics"].contains("si_snr"));
  }
}

TEST_F(CliTest, EvalJobsDoNotChangeOutput) {
  fs::create_directories(Path("deg"));
  int k = 0;
  for (double f : {120.0, 160.0, 200.0, 240.0, 280.0}) {
    WriteWav(Mix(Sawtooth(f, 16000, 1.0, 0.4), Noise(16000, 16000, 70 + k, 0.05)),
             Path("deg") / ("tone" + std::to_string(k) + ".wav"), WavEncoding::kFloat32);
    ++k;
  }
  const Result one = Cli({"eval", "--ref", P("corpus"), "--deg", P("deg"),
                          "--out", P("one.jsonl"), "--jobs", "1"});
  const Result eight = Cli({"eval", "--ref", P("corpus"), "--deg", P("deg"),
                            "--out", P("eight.jsonl"), "--jobs", "8"});
  ASSERT_EQ(one.code, kExitOk) << one.err;
  ASSERT_EQ(eight.code, kExitOk) << eight.err;
  EXPECT_EQ(Slurp(Path("one.jsonl")), Slurp(Path("eight.jsonl")));
  const auto lines = Lines(Slurp(Path("one.jsonl")));
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(nlohmann::json::parse(lines[0])["ref"], "tone0.wav");
  EXPECT_EQ(nlohmann::json::parse(lines[4])["ref"], "tone4.wav");
}

TEST_F(CliTest, EvalUnpairedFilesAreListed) {
  fs::create_directories(Path("lonely_ref"));
  fs::create_directories(Path("lonely_deg"));
  WriteWav(Sawtooth(200.0, 16000, 0.5), Path("lonely_ref") / "a.wav", WavEncoding::kFloat32);
  WriteWav(Sawtooth(200.0, 16000, 0.5), Path("lonely_deg") / "b.wav", WavEncoding::kFloat32);
  const Result r = Cli({"eval", "--ref", P("lonely_ref"), "--deg", P("lonely_deg")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("a.wav"), std::string::npos);
  EXPECT_NE(r.err.find("b.wav"), std::string::npos);
}

TEST_F(CliTest, EvalUnknownMetricIsUsageError) {
  const Result r = Cli({"eval", "--ref", P("corpus/tone0.wav"), "--deg",
                        P("corpus/tone0.wav"), "--metrics", "mos"});
  EXPECT_EQ(r.code, kExitUsage);
}

TEST_F(CliTest, LossesIdentityAndDefaults) {
  const Result r = Cli({"losses", "--ref", P("corpus/tone0.wav"), "--deg",
                        P("corpus/tone0.wav")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const nlohmann::json j = LastJson(r.out);
  EXPECT_EQ(j["time_domain"], 0.0);
  EXPECT_EQ(j["multi_scale_mel"], 0.0);
  EXPECT_EQ(j["scales"], (std::vector<int>{32, 64, 128, 256, 512, 1024, 2048}));
}

TEST_F(CliTest, LossesCombinedNormIsSum) {
  auto loss = [&](const std::string& norm) {
    const Result r = Cli({"losses", "--ref", P("corpus/tone0.wav"), "--deg",
                          P("deg/tone0.wav"), "--norm", norm});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    return LastJson(r.out);
  };
  if (!fs::exists(Path("deg/tone0.wav"))) {
    fs::create_directories(Path("deg"));
    WriteWav(Mix(Sawtooth(120.0, 16000, 1.0, 0.4), Noise(16000, 16000, 70, 0.05)),
             Path("deg") / "tone0.wav", WavEncoding::kFloat32);
  }
  const auto l1 = loss("l1");
  const auto l2 = loss("l2");
  const auto both = loss("l1_plus_l2");
  for (const char* key : {"time_domain", "multi_scale_mel"}) {
    EXPECT_NEAR(both[key].get<double>(),
                l1[key].get<double>() + l2[key].get<double>(), 1e-12);
  }
}

TEST_F(CliTest, ConfigFileValuesYieldToFlags) {
  std::ofstream(Path("cfg.json")) << R"({"bitrate": 800, "seed": 5})";
  const Result from_file = Cli({"encode", "--config", P("cfg.json"), "--model",
                                P("model.espk"), "--in", P("corpus/tone0.wav"),
                                "--out", P("cfg.espc")});
  ASSERT_EQ(from_file.code, kExitOk) << from_file.err;
  EXPECT_EQ(LastJson(from_file.out)["levels"], 4);
  const Result overridden = Cli({"encode", "--config", P("cfg.json"), "--model",
                                 P("model.espk"), "--in", P("corpus/tone0.wav"),
                                 "--out", P("cfg.espc"), "--bitrate", "200"});
  ASSERT_EQ(overridden.code, kExitOk) << overridden.err;
  EXPECT_EQ(LastJson(overridden.out)["levels"], 1);
}

}  // namespace
}  // namespace rvqkit
