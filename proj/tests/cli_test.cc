#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("xsem_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const {
    return (dir_ / name).string();
  }
  void Write(const std::string& name, const std::string& text) const {
    std::ofstream(Path(name)) << text;
  }
  std::string Read(const std::string& name) const {
    std::ifstream in(Path(name));
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }
  // Exit status; stdout lands in "out" and stderr in "err".
  int Run(const std::string& args) const {
    const std::string cmd = std::string(XSEM_CLI_PATH) + " " + args + " > '" +
                            Path("out") + "' 2> '" + Path("err") + "'";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

constexpr char kGraph[] =
    R"({"vars": [{"id": "e1", "kind": "event"}, {"id": "x1", "kind": "entity"}],)"
    R"( "instances": {"e1": {"tokens": ["sleeps"], "head_index": 0},)"
    R"( "x1": {"tokens": ["John"], "head_index": 0}}, "edges": [["e1", "ARG", "x1"]]})"
    "\n";

TEST_F(CliTest, ConvertsGraphToLinear) {
  Write("g.jsonl", kGraph);
  ASSERT_EQ(Run("convert " + Path("g.jsonl") + " --from graph --to linear"), 0);
  EXPECT_EQ(Read("out"), "[ sleeps_h ] ( John_h )\n");
  // The run manifest goes to stderr as JSON.
  EXPECT_NE(Read("err").find("\"subcommand\":\"convert\""), std::string::npos);
}

TEST_F(CliTest, HelpExampleRoundTrips) {
  ASSERT_EQ(Run("--help"), 0);
  const std::string help = Read("out");
  const std::string example =
      "[ ( 30 people_h ) were reported_h ] [ ( @b ) fled_h ( the city_h ) ]\n"
      "#coref 10 3\n";
  // The help shows the example indented by two spaces.
  ASSERT_NE(help.find("  [ ( 30 people_h ) were reported_h ] [ ( @b ) fled_h "
                      "( the city_h ) ]\n  #coref 10 3\n"),
            std::string::npos);
  Write("ex.lin", example);
  ASSERT_EQ(Run("convert " + Path("ex.lin") + " --from linear --to graph -o " +
                Path("ex.jsonl")),
            0);
  ASSERT_EQ(Run("convert " + Path("ex.jsonl") + " --from graph --to linear"), 0);
  EXPECT_EQ(Read("out"), example);
}

TEST_F(CliTest, ScoresIdenticalCorpora) {
  Write("g.jsonl", kGraph);
  ASSERT_EQ(Run("--json score " + Path("g.jsonl") + " " + Path("g.jsonl")), 0);
  EXPECT_NE(Read("out").find("\"f1\": 1.0"), std::string::npos) << Read("out");
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(Run("--version"), 0);
  EXPECT_EQ(Run("no-such-command"), 2);
  EXPECT_EQ(Run("validate " + Path("missing.jsonl")), 2);
  Write("bad.jsonl", "{\"vars\": 3}\n");
  EXPECT_EQ(Run("validate " + Path("bad.jsonl")), 2);
  EXPECT_NE(Read("err").find("line 1"), std::string::npos);
  Write("one.lin", "[ saw_h ] ( John_h ) ( @b )\n#coref 7 4\n");
  Write("two.lin",
        "[ saw_h ] ( John_h ) ( @b )\n#coref 7 4\n\n[ a_h ]\n");
  EXPECT_EQ(Run("coref-score " + Path("one.lin") + " " + Path("two.lin")), 3);
  EXPECT_EQ(Run("kernel gradcheck --dims 3 --tolerance 0"), 4);
}

TEST_F(CliTest, CorefScoreFixture) {
  Write("key.lin", "[ saw_h ] ( John_h ) ( @b )\n#coref 7 4\n");
  ASSERT_EQ(Run("coref-score " + Path("key.lin") + " " + Path("key.lin")), 0);
  EXPECT_NE(Read("out").find("100.00"), std::string::npos) << Read("out");
}

}  // namespace
