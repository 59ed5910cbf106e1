#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ergotest/experiment.hpp"

using namespace ergotest;
namespace fs = std::filesystem;

namespace {

fs::path config_dir() {
  const char* env = std::getenv("ERGOTEST_CONFIG_DIR");
  return env ? fs::path(env) : fs::path("configs");
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("ergotest_" + name + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

const char* kSmall = R"({
  "alphabet": "01", "depth": 5, "seed": 3,
  "processes": {
    "a": {"type": "iid", "probabilities": [0.3, 0.7]},
    "b": {"type": "markov", "order": 1, "transition": [[0.8, 0.2], [0.4, 0.6]]}
  },
  "hypotheses": {"h0": {"type": "finite", "members": ["a"]}, "h1": {"type": "finite", "members": ["b"]}},
  "experiment": {"type": "curve", "h0": "h0", "h1": "h1",
    "generators": [{"process": "a", "label": 0}, {"process": "b", "label": 1}],
    "sizes": [50, 400], "trials": 40}
})";

int run_text(const std::string& text, const fs::path& dir, std::string& log, std::size_t threads = 1,
             ConfigOverrides o = {}) {
  spit(dir / "config.json", text);
  std::ostringstream err;
  int rc = run_experiment(dir / "config.json", dir / "out", o, threads, err);
  log = err.str();
  return rc;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  auto pos = s.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
  return s;
}

}  // namespace

TEST(Config, ShippedConfigsParse) {
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(config_dir())) {
    if (entry.path().extension() != ".json") continue;
    SCOPED_TRACE(entry.path().string());
    ExperimentConfig cfg = load_config(entry.path());
    EXPECT_FALSE(cfg.type.empty());
    ++count;
  }
  EXPECT_GE(count, 6u);
}

TEST(Config, BuildsEveryProcessKind) {
  auto cfg = parse_config(Json::parse(R"({
    "alphabet": "abc", "depth": 3, "seed": 1,
    "processes": {
      "i": {"type": "iid", "probabilities": [0.2, 0.3, 0.5], "alphabet": "abc"},
      "m": {"type": "markov", "order": 1, "transition": [[0.5, 0.25, 0.25], [0.1, 0.1, 0.8], [0.3, 0.3, 0.4]]},
      "mix": {"type": "mixture", "components": ["i", "m"], "weights": [0.5, 0.5]},
      "s": {"type": "switching", "x": "i", "y": "m", "p": 0.1, "q": 0.2},
      "t": {"type": "switching", "x": "i", "y": "m", "dwell": 50, "y_share": 0.25}
    },
    "hypotheses": {
      "fam": {"type": "markov_family", "order": 0, "lower": [0.1, 0.1, 0.1], "upper": [0.6, 0.6, 0.6]},
      "ball": {"type": "ball", "center": "i", "radius": 0.5, "members": ["s"]}
    },
    "experiment": {"type": "distance", "first": "i", "second": "m"}
  })"));
  EXPECT_EQ(cfg.processes.size(), 5u);
  EXPECT_EQ(cfg.alphabet.size(), 3u);
  auto t = std::dynamic_pointer_cast<const SwitchingProcess>(cfg.processes.at("t"));
  ASSERT_TRUE(t);
  EXPECT_NEAR(t->y_share(), 0.25, 1e-15);
  EXPECT_NEAR(t->p(), 1.0 / 50, 1e-15);
  EXPECT_EQ(cfg.hypotheses.size(), 2u);
}

TEST(Config, ValidationErrorsNameTheProblem) {
  auto message = [](const std::string& text) {
    try {
      parse_config(Json::parse(text));
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message(R"({"alphabet": "01", "depth": 3, "experiment": {"type": "distance"}})").find("'seed'"),
            std::string::npos);
  EXPECT_NE(message(R"({"alphabet": "01", "seed": 1, "depth": 3, "experiment": {"type": "x"},
                        "processes": {"m": {"type": "mixture", "components": ["m"], "weights": [1]}}})")
                .find("refers to itself"),
            std::string::npos);
  EXPECT_NE(message(R"({"alphabet": "01", "seed": 1, "depth": 3, "experiment": {"type": "x"},
                        "processes": {"p": {"type": "iid", "alphabet": "ab", "probabilities": [0.5, 0.5]}}})")
                .find("alphabet"),
            std::string::npos);
  EXPECT_NE(message(R"({"alphabet": "01", "seed": 1, "depth": 3, "experiment": {"type": "x"},
                        "processes": {"p": {"type": "poisson"}}})")
                .find("poisson"),
            std::string::npos);
  EXPECT_NE(message(R"({"alphabet": "01", "seed": 1, "depth": "deep", "experiment": {"type": "x"}})")
                .find("config.depth"),
            std::string::npos);
  EXPECT_NE(message(R"({"alphabet": "01", "seed": 1, "depth": 3, "experiment": {"type": "x"},
                        "hypotheses": {"h": {"type": "finite", "members": ["ghost"]}}})")
                .find("'ghost'"),
            std::string::npos);
}

TEST(Run, UndefinedHypothesisExitsWithTwo) {
  auto dir = scratch("undefined");
  std::string log;
  EXPECT_EQ(run_text(replace(kSmall, R"("h1": "h1",)", R"("h1": "h_missing",)"), dir, log), kExitValidation);
  EXPECT_NE(log.find("h_missing"), std::string::npos) << log;
  EXPECT_FALSE(fs::exists(dir / "out" / "report.csv"));
}

TEST(Run, UnreadableOrMalformedConfigExitsWithTwo) {
  auto dir = scratch("malformed");
  std::ostringstream err;
  EXPECT_EQ(run_experiment(dir / "nope.json", dir / "out", {}, 1, err), kExitValidation);
  std::string log;
  EXPECT_EQ(run_text("{ not json", dir, log), kExitValidation);
  EXPECT_EQ(run_text(replace(kSmall, R"("alphabet": "01")", R"("alphabet": "012")"), dir, log), kExitValidation);
}

TEST(Run, MembershipMismatchIsAValidationError) {
  auto dir = scratch("mismatch");
  std::string log;
  EXPECT_EQ(run_text(replace(kSmall, R"({"process": "a", "label": 0})", R"({"process": "a", "label": 1})"), dir, log),
            kExitValidation);
  EXPECT_NE(log.find("not a member"), std::string::npos) << log;
}

TEST(Run, UnwritableOutputExitsWithThree) {
  auto dir = scratch("unwritable");
  spit(dir / "config.json", kSmall);
  spit(dir / "blocker", "x");
  std::ostringstream err;
  EXPECT_EQ(run_experiment(dir / "config.json", dir / "blocker" / "out", {}, 1, err), kExitRuntime);
}

TEST(Run, WritesReportsAndManifest) {
  auto dir = scratch("reports");
  std::string log;
  ASSERT_EQ(run_text(kSmall, dir, log), kExitOk) << log;
  auto report = Json::parse(slurp(dir / "out" / "report.json"));
  EXPECT_EQ(report["experiment"], "curve");
  EXPECT_EQ(report["cells"].size(), 4u);
  auto manifest = Json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["config_hash"], fnv1a_hex(kSmall));
  EXPECT_EQ(manifest["seed"], 3);
  EXPECT_EQ(manifest["version"], kVersion);
  EXPECT_TRUE(manifest.contains("wall_time_seconds"));
  std::string csv = slurp(dir / "out" / "report.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "experiment,generator,label,n,trials,errors,error_rate,ci_halfwidth");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Run, TestExperimentOnSampleFile) {
  auto dir = scratch("testexp");
  spit(dir / "x.txt", "0001000100010001\n");
  std::string text = R"({
    "alphabet": "01", "depth": 4, "seed": 1,
    "processes": {"a": {"type": "iid", "probabilities": [0.75, 0.25]}, "b": {"type": "iid", "probabilities": [0.25, 0.75]}},
    "hypotheses": {"h0": {"type": "finite", "members": ["a"]}, "h1": {"type": "finite", "members": ["b"]}},
    "experiment": {"type": "test", "sample": "x.txt", "h0": "h0", "h1": "h1"}
  })";
  std::string log;
  ASSERT_EQ(run_text(text, dir, log), kExitOk) << log;
  auto report = Json::parse(slurp(dir / "out" / "report.json"));
  EXPECT_EQ(report["decision"], 0);
  EXPECT_EQ(report["n"], 16);
  for (const char* key : {"d0", "d1"}) {
    EXPECT_TRUE(report[key].contains("value"));
    EXPECT_TRUE(report[key].contains("tail_bound"));
  }
  EXPECT_LT(report["d0"]["value"].get<double>(), report["d1"]["value"].get<double>());
}

TEST(Run, SameSeedSameCsvAtAnyThreadCount) {
  auto dir = scratch("determinism");
  std::string log;
  ASSERT_EQ(run_text(kSmall, dir, log, 1), kExitOk);
  std::string first = slurp(dir / "out" / "report.csv");
  for (std::size_t threads : {1u, 3u, 8u}) {
    ASSERT_EQ(run_text(kSmall, dir, log, threads), kExitOk);
    EXPECT_EQ(slurp(dir / "out" / "report.csv"), first) << threads;
  }
  ASSERT_EQ(run_text(kSmall, dir, log, 1, ConfigOverrides{12345, std::nullopt}), kExitOk);
  EXPECT_EQ(Json::parse(slurp(dir / "out" / "manifest.json"))["seed"], 12345);
  EXPECT_NE(slurp(dir / "out" / "report.csv"), first);
}

TEST(Run, DepthOverride) {
  auto dir = scratch("depth");
  std::string log;
  ASSERT_EQ(run_text(kSmall, dir, log, 1, ConfigOverrides{std::nullopt, 2}), kExitOk);
  EXPECT_EQ(Json::parse(slurp(dir / "out" / "report.json"))["depth"], 2);
}

TEST(SampleIo, ReadsSingleLine) {
  auto dir = scratch("io1");
  spit(dir / "s.txt", "0001");
  Sample x = read_sample(dir / "s.txt", Alphabet::binary());
  EXPECT_EQ(x.size(), 4u);
  EXPECT_EQ(x.to_string(), "0001");
}

TEST(SampleIo, BadSymbolNamesPosition) {
  auto dir = scratch("io2");
  spit(dir / "s.txt", "01a1");
  try {
    read_sample(dir / "s.txt", Alphabet::binary());
    FAIL() << "accepted a bad symbol";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("position 3"), std::string::npos) << e.what();
  }
  spit(dir / "c.csv", "0\n1\nx\n");
  try {
    read_sample(dir / "c.csv", Alphabet::binary());
    FAIL() << "accepted a bad symbol";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("position 3"), std::string::npos) << e.what();
  }
}

TEST(SampleIo, EmptyAndMissingFilesAreErrors) {
  auto dir = scratch("io3");
  spit(dir / "empty.txt", "");
  EXPECT_THROW(read_sample(dir / "empty.txt", Alphabet::binary()), ValidationError);
  spit(dir / "blank.txt", " \n\n");
  EXPECT_THROW(read_sample(dir / "blank.txt", Alphabet::binary()), ValidationError);
  EXPECT_THROW(read_sample(dir / "absent.txt", Alphabet::binary()), ValidationError);
}

TEST(SampleIo, SingleColumnCsv) {
  auto dir = scratch("io4");
  spit(dir / "c.csv", "a\r\nc\r\nb\r\na\r\n");
  Sample x = read_sample(dir / "c.csv", Alphabet("abc"));
  EXPECT_EQ(x.to_string(), "acba");
  spit(dir / "wide.csv", "a,b\nc,a\n");
  EXPECT_THROW(read_sample(dir / "wide.csv", Alphabet("abc")), ValidationError);
}

TEST(SampleIo, RoundTrip) {
  auto dir = scratch("io5");
  auto p = std::make_shared<const MarkovProcess>(Alphabet("xyz"), 2,
                                                 std::vector<double>(27, 1.0 / 3.0));
  Sample x = p->sample(777, make_stream(5, {}));
  write_sample(dir / "s.txt", x);
  EXPECT_EQ(read_sample(dir / "s.txt", Alphabet("xyz")), x);
}

TEST(Report, CsvQuotingAndHash) {
  CsvTable t({"a", "b"});
  t.add({"x,y", "say \"hi\""});
  EXPECT_EQ(t.str(), "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
  EXPECT_THROW(t.add({"only one"}), std::logic_error);
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fmt(0.1), "0.10000000000000001");
}
