#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <regex>
#include <set>

#include "graphspy/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("graphspy_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
            std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args) {
    const auto out = dir_ / "stdout", err = dir_ / "stderr";
    const std::string cmd = std::string(GRAPHSPY_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = graphspy::read_file(out);
    r.err = graphspy::read_file(err);
    return r;
  }

  fs::path path(const std::string& name) const { return dir_ / name; }
  void write(const std::string& name, const std::string& text) const { graphspy::write_file_atomic(path(name), text); }

  fs::path dir_;
};

const char* kProgram = R"(proc main:
  call f
  halt

proc f:
  mov r1, 5
  st [r0+3], r1
  st [r0+3], r1
  ld r2, [r0+3]
  ret
)";

}  // namespace

TEST_F(Cli, HelpAllListsEveryFlag) {
  auto r = run("--help-all");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto src = graphspy::read_file(GRAPHSPY_CLI_SOURCE);
  std::regex flag(R"re(add_(?:option|flag)\("(--[a-z0-9-]+)")re");
  std::set<std::string> flags;
  for (std::sregex_iterator it(src.begin(), src.end(), flag), end; it != end; ++it) flags.insert((*it)[1]);
  EXPECT_GT(flags.size(), 30u);
  for (const auto& f : flags) EXPECT_NE(r.out.find(f), std::string::npos) << f;
  for (const char* sub : {"generate", "label", "featurize", "train", "evaluate", "predict", "report", "selfcheck"})
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
}

TEST_F(Cli, LabelIsIdempotent) {
  write("p.asm", kProgram);
  auto a = run("label --program " + path("p.asm").string());
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(json::parse(a.out), json::parse(R"({"f":1,"main":0})"));
  auto b = run("label --program " + path("p.asm").string() + " --out " + path("l.json").string() + " --reports " +
               path("r.jsonl").string());
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(graphspy::read_file(path("l.json")), a.out);
  auto reports = graphspy::read_file(path("r.jsonl"));
  EXPECT_EQ(std::count(reports.begin(), reports.end(), '\n'), 1);
}

TEST_F(Cli, ConfigFileLosesToFlags) {
  write("seed5.cfg", "# generator seed\nseed = 5\n");
  ASSERT_EQ(run("generate --seed 5 --quiet --program " + path("five.asm").string()).code, 0);
  ASSERT_EQ(run("generate --seed 6 --quiet --program " + path("six.asm").string()).code, 0);
  ASSERT_EQ(run("generate --quiet --config " + path("seed5.cfg").string() + " --program " + path("c.asm").string()).code, 0);
  EXPECT_EQ(graphspy::read_file(path("c.asm")), graphspy::read_file(path("five.asm")));
  ASSERT_EQ(run("generate --quiet --seed 6 --config " + path("seed5.cfg").string() + " --program " + path("d.asm").string()).code, 0);
  EXPECT_EQ(graphspy::read_file(path("d.asm")), graphspy::read_file(path("six.asm")));
  EXPECT_NE(graphspy::read_file(path("five.asm")), graphspy::read_file(path("six.asm")));
}

TEST_F(Cli, UnknownConfigKeyIsUsageError) {
  write("bad.cfg", "seed = 5\nbogus = 1\n");
  auto r = run("generate --config " + path("bad.cfg").string() + " --program " + path("x.asm").string());
  EXPECT_EQ(r.code, 2);
  auto e = json::parse(r.err);
  EXPECT_EQ(e["exit_code"], 2);
  EXPECT_NE(e["message"].get<std::string>().find("bogus"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("x.asm")));
}

TEST_F(Cli, ExitCodesAndErrorJson) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("label --no-such-flag").code, 2);
  auto missing = run("label --program " + path("absent.asm").string());
  EXPECT_EQ(missing.code, 2);
  EXPECT_EQ(json::parse(missing.err)["error"], "UsageError");

  write("bad.asm", "proc main:\n  frob r1\n  halt\n");
  auto bad = run("label --program " + path("bad.asm").string());
  EXPECT_EQ(bad.code, 3);
  auto e = json::parse(bad.err);
  EXPECT_EQ(e["error"], "UnknownMnemonic");
  EXPECT_EQ(e["exit_code"], 3);
  EXPECT_TRUE(bad.out.empty());

  write("p.asm", kProgram);
  EXPECT_EQ(run("label --dialect C --program " + path("p.asm").string()).code, 2);
  EXPECT_EQ(run("label --dialect B --program " + path("p.asm").string()).code, 3);  // dialect A text
}

TEST_F(Cli, GenerateIsSeedDeterministic) {
  const std::string args = " --quiet generate --samples 40 --configs A-Opt0,B-Opt1 --out ";
  ASSERT_EQ(run(args + path("one").string()).code, 0);
  ASSERT_EQ(run(args + path("two").string()).code, 0);
  for (const char* tag : {"A-Opt0", "B-Opt1", "Hybrid"})
    for (const char* f : {"train.jsonl.gz", "test.jsonl.gz", "manifest.json"})
      EXPECT_EQ(graphspy::read_file(path("one") / tag / f), graphspy::read_file(path("two") / tag / f)) << tag << f;
}

TEST_F(Cli, FeaturizeWritesOneRecordPerExercisedProcedure) {
  write("p.asm", kProgram);
  auto r = run("featurize --program " + path("p.asm").string() + " --cct " + path("cct.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);
  auto rec = json::parse(r.out.substr(0, r.out.find('\n')));
  EXPECT_EQ(rec["proc"], "f");
  EXPECT_EQ(rec["label"], 1);
  EXPECT_EQ(json::parse(graphspy::read_file(path("cct.json")))["kind"], "cct");
}
