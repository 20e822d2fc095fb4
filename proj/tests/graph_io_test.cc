#include "xsem/graph_io.h"

#include <functional>
#include <string>

#include <gtest/gtest.h>

#include "support/fuzz.h"
#include "xsem/error.h"

namespace xsem {
namespace {

using testing::Rng;

std::string ErrorOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInput);
    return e.what();
  }
  ADD_FAILURE() << "no error";
  return {};
}

bool Contains(const std::string& s, const std::string& part) {
  return s.find(part) != std::string::npos;
}

constexpr const char* kRecord =
    R"({"id":"s1","vars":[{"id":"e1","kind":"event"},{"id":"x1","kind":"entity"}],)"
    R"("instances":{"e1":{"tokens":["sleeps"],"head_index":0,"origin_positions":[1]},)"
    R"("x1":{"tokens":["John"],"head_index":0}},"edges":[["e1","ARG","x1"]]})";

TEST(GraphIoTest, ReadsGraphRecord) {
  const GraphRecord r = GraphRecordFromJson(kRecord);
  EXPECT_EQ(r.id, "s1");
  ASSERT_EQ(r.graph.vars.size(), 2u);
  EXPECT_EQ(r.graph.vars[0].kind, VarKind::kEvent);
  EXPECT_EQ(r.graph.InstanceOf("e1").origin_positions,
            std::vector<std::size_t>{1});
  EXPECT_FALSE(r.graph.InstanceOf("x1").origin_positions.has_value());
  EXPECT_EQ(r.graph.edges, (std::vector<Edge>{{"e1", "ARG", "x1"}}));
  EXPECT_FALSE(r.skeleton.has_value());
  EXPECT_EQ(GraphRecordFromJson(GraphRecordToJson(r)).graph, r.graph);
}

TEST(GraphIoTest, StrictModeRejectsUnknownFields) {
  std::string extra = kRecord;
  extra.insert(extra.size() - 1, R"(,"note":"x")");
  EXPECT_TRUE(Contains(ErrorOf([&] { GraphRecordFromJson(extra); }),
                       "unknown field 'note'"));
  EXPECT_NO_THROW(GraphRecordFromJson(extra, /*strict=*/false));
}

TEST(GraphIoTest, ErrorsNameTheLine) {
  const std::string text = std::string(kRecord) + "\n\n{\"vars\": 3}\n";
  const std::string msg = ErrorOf([&] { ReadGraphCorpus(text); });
  EXPECT_TRUE(Contains(msg, "line 3 (record 2)")) << msg;
  EXPECT_TRUE(Contains(ErrorOf([] { ReadGraphCorpus("{oops"); }),
                       "malformed JSON"));
  EXPECT_TRUE(Contains(
      ErrorOf([] { ReadGraphCorpus(R"({"vars":[],"instances":{}})"); }),
      "lacks field 'edges'"));
  EXPECT_TRUE(Contains(
      ErrorOf([] {
        ReadGraphCorpus(
            R"({"vars":[{"id":"a","kind":"thing"}],"instances":{},"edges":[]})");
      }),
      "kind"));
  // Records are validated.
  EXPECT_TRUE(Contains(
      ErrorOf([] {
        ReadGraphCorpus(
            R"({"vars":[{"id":"a","kind":"entity"}],"instances":{},"edges":[]})");
      }),
      "instance-total"));
}

TEST(GraphIoTest, GraphCorpusRoundTripFuzz) {
  Rng rng(41);
  std::vector<GraphRecord> corpus;
  for (int i = 0; i < 300; ++i) {
    testing::GraphShape shape;
    shape.origins = i % 2 == 0;
    shape.words = &testing::TrickyWords();
    GraphRecord r;
    if (i % 3 == 0) r.id = "s" + std::to_string(i);
    r.graph = testing::RandomGraph(rng, shape);
    if (i % 4 == 0) r.skeleton = DefaultSkeleton(r.graph);
    corpus.push_back(std::move(r));
  }
  const std::string text = WriteGraphCorpus(corpus);
  const auto back = ReadGraphCorpus(text);
  ASSERT_EQ(back.size(), corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(back[i].id, corpus[i].id);
    EXPECT_EQ(back[i].graph, corpus[i].graph);
    EXPECT_EQ(back[i].skeleton, corpus[i].skeleton);
  }
  EXPECT_EQ(WriteGraphCorpus(back), text);
}

TEST(GraphIoTest, FlatCorpusRoundTripFuzz) {
  Rng rng(42);
  std::vector<FlatRecord> corpus;
  for (int i = 0; i < 300; ++i) {
    testing::GraphShape shape;
    shape.origins = i % 2 == 1;
    FlatRecord r;
    r.id = "f" + std::to_string(i);
    r.flat = GraphToFlat(testing::RandomGraph(rng, shape));
    corpus.push_back(std::move(r));
  }
  const std::string text = WriteFlatCorpus(corpus);
  const auto back = ReadFlatCorpus(text);
  ASSERT_EQ(back.size(), corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(back[i].id, corpus[i].id);
    EXPECT_EQ(back[i].flat, corpus[i].flat);
  }
  EXPECT_EQ(WriteFlatCorpus(back), text);
}

TEST(GraphIoTest, FlatRecordErrors) {
  EXPECT_TRUE(Contains(
      ErrorOf([] {
        ReadFlatCorpus(
            R"({"preds":[{"var":"e1","kind":"event","tokens":["a"],"head_index":0}],"args":[["e1","x9"]]})");
      }),
      "arg-known"));
  EXPECT_TRUE(Contains(
      ErrorOf([] { ReadFlatCorpus(R"({"preds":[],"args":[["a"]]})"); }),
      "[governor, dependent]"));
}

TEST(GraphIoTest, EmptyCorpus) {
  EXPECT_TRUE(ReadGraphCorpus("").empty());
  EXPECT_TRUE(ReadGraphCorpus("\n  \n").empty());
  EXPECT_EQ(WriteGraphCorpus({}), "");
}

}  // namespace
}  // namespace xsem
